#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "qstack/errors.hpp"

namespace qstack {

using State = Eigen::VectorXd;
using Action = Eigen::VectorXd;

/// Right-hand side of the continuous-time system, state-units per second.
using DynamicsFn = std::function<State(const State&, const Action&)>;

/// Any state component beyond this magnitude aborts an integration pass.
inline constexpr double kDivergenceCap = 1e6;

/// Known bound on how fast the first `leading_dims` state components can
/// move (Euclidean speed). Lets closed-loop rollouts assert the
/// displacement bound ||x_lead(t) - x_lead(0)|| <= rate * t.
struct DriftBound {
  int leading_dims = 0;
  double rate = 0.0;
};

/// A continuous-time control system x' = rhs(x, u).
///
/// rhs must be deterministic and side-effect free; Dynamics values are
/// immutable after construction and safe to share across threads.
struct Dynamics {
  int state_dim = 0;
  int action_dim = 0;
  DynamicsFn rhs;
  std::optional<DriftBound> drift_bound{};
};

/// Closed-loop trajectory sampled every `delta` seconds.
///
/// states[k] is the state at t0 + k*delta. substates[k], when recorded,
/// holds the integrator sub-grid inside interval k (substeps+1 points,
/// endpoints included) for quadrature. Re-integrating any interval with the
/// same substep count reproduces states[k+1] bit-exactly.
struct SampledTrajectory {
  double t0 = 0.0;
  double delta = 0.0;
  std::vector<State> states;
  std::vector<std::vector<State>> substates;
};

/// Integrates x' = rhs(x, u) over [0, delta] with u held constant,
/// classical RK4 on `substeps` equal sub-intervals. If `grid` is non-null
/// it receives the substeps+1 sub-grid states, endpoints included.
State integrate_step(const Dynamics& dyn, const State& x, const Action& u,
                     double delta, int substeps,
                     std::vector<State>* grid = nullptr);

/// One explicit Euler step: x + delta * rhs(x, u). This is the actor's
/// prediction model; it is deliberately a single coarse step so that the
/// model mismatch against the integrated plant stays observable.
State euler_predict(const Dynamics& dyn, const State& x, const Action& u,
                    double delta);

/// Rolls the Euler predictor through an action stack. Returns N states for
/// a stack of N-1 actions; the first entry is `x` itself.
std::vector<State> predict_horizon(const Dynamics& dyn, const State& x,
                                   const std::vector<Action>& stack,
                                   double delta);

/// Closed-loop sample-and-hold rollout: at every sample instant the policy
/// is queried once and the action held for delta seconds.
SampledTrajectory rollout_sampled(
    const Dynamics& dyn, const State& x0,
    const std::function<Action(const State&)>& policy, double delta,
    int steps, int substeps, bool record_substates = false);

}  // namespace qstack
