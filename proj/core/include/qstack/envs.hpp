#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qstack/agents.hpp"

namespace qstack {

// --- Three-wheel robot (kinematic unicycle) --------------------------------
//
// State (x [m], y [m], alpha [rad]); action (v [m/s], omega [rad/s]).
// alpha is kept unwrapped: no modular reduction anywhere in the dynamics or
// the features, so the Euler predictor sees a continuous signal.

inline constexpr double kRobotVMax = 0.22;      // [m/s]
inline constexpr double kRobotOmegaMax = 2.84;  // [rad/s]

/// (v cos a, v sin a, omega).
State robot_rhs(const State& s, const Action& u);

Dynamics robot_dynamics();
ActionBounds robot_action_bounds();

/// Robot parking task: quadratic stage cost over [x, y, alpha, v, omega]
/// with R = diag(10, 10, 1, 0.1, 0.1) unless overridden.
EpisodeEnv robot_env();

// --- Linear-quadratic verification environment -----------------------------

/// Solves A'P + PA - P B R^-1 B' P + Q = 0 for the stabilizing P.
/// Riccati-ODE integration provides a stabilizing seed, Newton/Kleinman
/// iterations polish it to residual < 1e-8. Throws OracleFailed otherwise.
Eigen::MatrixXd care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Linear plant with exactly known optimal cost-to-go J*(x) = x'Px.
struct LqrEnv {
  Eigen::MatrixXd A, B, Q_cost, R_cost, P;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }
  double optimal_cost(const State& x) const { return x.dot(P * x); }
  /// Continuous-LQR feedback -R^-1 B' P x.
  Action optimal_action(const State& x) const;
};

/// Builds the env and validates the Riccati residual.
LqrEnv make_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Double integrator x1' = x2, x2' = u with unit weights;
/// P = [[sqrt(3), 1], [1, sqrt(3)]].
LqrEnv double_integrator();

Dynamics lqr_dynamics(const LqrEnv& lqr);
StageCost lqr_stage_cost(const LqrEnv& lqr);
EpisodeEnv lqr_episode_env(const LqrEnv& lqr, const ActionBounds& bounds);

/// Exact discretization of the held-input linear system over one interval:
/// x(delta) = Ad x + Bd u, via the augmented matrix exponential.
void lqr_discretize(const LqrEnv& lqr, double delta, Eigen::MatrixXd* Ad,
                    Eigen::MatrixXd* Bd);

/// Exact one-interval Q-function of the LQR plant as a quadratic form over
/// z = [x; u]:  integral_0^delta e^(-gamma tau) (x'Qx + u'Ru) dtau
/// + e^(-gamma delta) (Ad x + Bd u)' P (Ad x + Bd u).
/// Built by integrating the variational matrix ODE on a fine grid,
/// independently of the stage-cost quadrature path.
Eigen::MatrixXd exact_q_form(const LqrEnv& lqr, double delta, double gamma);

/// exact_q_form flattened to Q-critic weights.
Eigen::VectorXd exact_q_weights(const LqrEnv& lqr, double delta, double gamma);

/// J* = x'Px flattened to V-critic weights.
Eigen::VectorXd exact_v_weights(const LqrEnv& lqr);

// --- Deterministic MDP fixtures ---------------------------------------------

/// Deterministic MDP with integer edge costs; the theorem oracles run on
/// these with exact arithmetic.
struct Mdp {
  struct Arc {
    int next = 0;
    long long cost = 0;
  };
  // actions[s] lists the arcs available in state s (at least one each).
  std::vector<std::vector<Arc>> actions;

  int num_states() const { return static_cast<int>(actions.size()); }
};

/// The 4-node chain: x0 ->(2) C ->(2) Y(0-loop), x0 ->(10) K ->(10) Y.
/// State order: x0, C, K, Y.
Mdp chain_fixture();

}  // namespace qstack
