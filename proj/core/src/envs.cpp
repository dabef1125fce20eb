#include "qstack/envs.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qstack {

State robot_rhs(const State& s, const Action& u) {
  State d(3);
  d[0] = u[0] * std::cos(s[2]);
  d[1] = u[0] * std::sin(s[2]);
  d[2] = u[1];
  return d;
}

Dynamics robot_dynamics() {
  Dynamics dyn;
  dyn.state_dim = 3;
  dyn.action_dim = 2;
  dyn.rhs = robot_rhs;
  // ||(x', y')|| = |v| <= v_max for any admissible action.
  dyn.drift_bound = DriftBound{2, kRobotVMax};
  return dyn;
}

ActionBounds robot_action_bounds() {
  ActionBounds b;
  b.lo = Eigen::Vector2d(-kRobotVMax, -kRobotOmegaMax);
  b.hi = Eigen::Vector2d(kRobotVMax, kRobotOmegaMax);
  return b;
}

EpisodeEnv robot_env() {
  EpisodeEnv env;
  env.name = "robot3w";
  env.dyn = robot_dynamics();
  env.cost.kind = RegressorKind::StateAction;
  env.cost.r_diag = (Eigen::VectorXd(5) << 10, 10, 1, 0.1, 0.1).finished();
  env.bounds = robot_action_bounds();
  env.layout.position_dims = 2;
  env.layout.angle_index = 2;
  return env;
}

namespace {

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Rinv,
                     const Eigen::MatrixXd& P) {
  return (A.transpose() * P + P * A - P * B * Rinv * B.transpose() * P + Q)
      .norm();
}

// Solves A'X + XA = -C by vectorization; fine for the small n used here.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& C) {
  const long n = A.rows();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd K(n * n, n * n);
  // vec(A'X + XA) = (I (x) A' + A' (x) I) vec(X), column-major vec.
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) =
          (i == j ? A.transpose() : Eigen::MatrixXd::Zero(n, n)) +
          A(j, i) * I;
    }
  }
  Eigen::VectorXd vecC(n * n);
  for (long j = 0; j < n; ++j) vecC.segment(j * n, n) = -C.col(j);
  Eigen::VectorXd vecX = K.fullPivLu().solve(vecC);
  Eigen::MatrixXd X(n, n);
  for (long j = 0; j < n; ++j) X.col(j) = vecX.segment(j * n, n);
  return 0.5 * (X + X.transpose());
}

}  // namespace

Eigen::MatrixXd care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const long n = A.rows();
  const Eigen::MatrixXd Rinv = R.inverse();

  // Phase 1: integrate the Riccati ODE from P = Q until the residual is
  // small enough to make the closed loop stabilizing.
  Eigen::MatrixXd P = Q;
  const double dt = 1e-3;
  const int max_ode_iters = 2'000'000;
  bool seeded = false;
  for (int i = 0; i < max_ode_iters; ++i) {
    Eigen::MatrixXd grad =
        A.transpose() * P + P * A - P * B * Rinv * B.transpose() * P + Q;
    P += dt * grad;
    if (i % 50 == 0 && grad.norm() < 1e-2) {
      seeded = true;
      break;
    }
  }
  if (!seeded && care_residual(A, B, Q, Rinv, P) >= 1e-2) {
    throw OracleFailed("care_solve: Riccati ODE phase did not converge");
  }

  // Phase 2: Newton/Kleinman polish, quadratic convergence.
  for (int it = 0; it < 50; ++it) {
    const Eigen::MatrixXd K = Rinv * B.transpose() * P;
    const Eigen::MatrixXd Acl = A - B * K;
    P = solve_lyapunov(Acl, Q + K.transpose() * R * K);
    if (care_residual(A, B, Q, Rinv, P) < 1e-10) break;
  }
  if (care_residual(A, B, Q, Rinv, P) >= 1e-8) {
    throw OracleFailed("care_solve: residual above 1e-8 after refinement");
  }
  return 0.5 * (P + P.transpose());
}

Action LqrEnv::optimal_action(const State& x) const {
  return -R_cost.inverse() * B.transpose() * P * x;
}

LqrEnv make_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  LqrEnv env{A, B, Q, R, care_solve(A, B, Q, R)};
  return env;
}

LqrEnv double_integrator() {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  return make_lqr(A, B, Eigen::MatrixXd::Identity(2, 2),
                  Eigen::MatrixXd::Identity(1, 1));
}

Dynamics lqr_dynamics(const LqrEnv& lqr) {
  Dynamics dyn;
  dyn.state_dim = lqr.state_dim();
  dyn.action_dim = lqr.action_dim();
  const Eigen::MatrixXd A = lqr.A;
  const Eigen::MatrixXd B = lqr.B;
  dyn.rhs = [A, B](const State& x, const Action& u) -> State {
    return A * x + B * u;
  };
  return dyn;
}

StageCost lqr_stage_cost(const LqrEnv& lqr) {
  // The verification plants use diagonal Q/R, so the diagonal stage-cost
  // representation is exact.
  StageCost sc;
  sc.kind = RegressorKind::StateAction;
  const int n = lqr.state_dim();
  const int m = lqr.action_dim();
  sc.r_diag.resize(n + m);
  for (int i = 0; i < n; ++i) sc.r_diag[i] = lqr.Q_cost(i, i);
  for (int j = 0; j < m; ++j) sc.r_diag[n + j] = lqr.R_cost(j, j);
  return sc;
}

EpisodeEnv lqr_episode_env(const LqrEnv& lqr, const ActionBounds& bounds) {
  EpisodeEnv env;
  env.name = "lqr2d";
  env.dyn = lqr_dynamics(lqr);
  env.cost = lqr_stage_cost(lqr);
  env.bounds = bounds;
  env.layout.position_dims = lqr.state_dim();
  return env;
}

void lqr_discretize(const LqrEnv& lqr, double delta, Eigen::MatrixXd* Ad,
                    Eigen::MatrixXd* Bd) {
  const int n = lqr.state_dim();
  const int m = lqr.action_dim();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = lqr.A;
  aug.topRightCorner(n, m) = lqr.B;
  const Eigen::MatrixXd big = (aug * delta).exp();
  *Ad = big.topLeftCorner(n, n);
  *Bd = big.topRightCorner(n, m);
}

Eigen::MatrixXd exact_q_form(const LqrEnv& lqr, double delta, double gamma) {
  const int n = lqr.state_dim();
  const int m = lqr.action_dim();

  // G(tau) = [E(tau) F(tau); 0 I] maps z = [x; u] to [x(tau); u]. Integrate
  // E' = A E, F' = A F + B with RK4 on a fine grid and accumulate
  // integral e^(-gamma tau) G' blkdiag(Q, R) G dtau with Simpson weights.
  const int steps = 4096;  // even, Simpson-compatible
  const double h = delta / steps;

  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, m);

  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(n + m, n + m);
  lam.topLeftCorner(n, n) = lqr.Q_cost;
  lam.bottomRightCorner(m, m) = lqr.R_cost;

  auto integrand = [&](const Eigen::MatrixXd& Ecur, const Eigen::MatrixXd& Fcur,
                       double tau) -> Eigen::MatrixXd {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + m, n + m);
    G.topLeftCorner(n, n) = Ecur;
    G.topRightCorner(n, m) = Fcur;
    G.bottomRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
    return std::exp(-gamma * tau) * G.transpose() * lam * G;
  };

  Eigen::MatrixXd acc = integrand(E, F, 0.0);  // Simpson endpoint weight 1
  for (int s = 1; s <= steps; ++s) {
    // One RK4 step of the matrix ODE [E F]' = A [E F] + [0 B].
    auto rhs = [&](const Eigen::MatrixXd& Ec, const Eigen::MatrixXd& Fc) {
      return std::make_pair(Eigen::MatrixXd(lqr.A * Ec),
                            Eigen::MatrixXd(lqr.A * Fc + lqr.B));
    };
    auto [kE1, kF1] = rhs(E, F);
    auto [kE2, kF2] = rhs(E + 0.5 * h * kE1, F + 0.5 * h * kF1);
    auto [kE3, kF3] = rhs(E + 0.5 * h * kE2, F + 0.5 * h * kF2);
    auto [kE4, kF4] = rhs(E + h * kE3, F + h * kF3);
    E += (h / 6.0) * (kE1 + 2 * kE2 + 2 * kE3 + kE4);
    F += (h / 6.0) * (kF1 + 2 * kF2 + 2 * kF3 + kF4);

    const double weight = (s == steps) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
    acc += weight * integrand(E, F, h * s);
  }
  Eigen::MatrixXd M = (h / 3.0) * acc;

  // Terminal piece: e^(-gamma delta) (Ad x + Bd u)' P (Ad x + Bd u), using
  // the integrated E(delta), F(delta) as the exact discretization.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + m, n + m);
  G.topLeftCorner(n, n) = E;
  G.topRightCorner(n, m) = F;
  G.bottomRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd Pext = Eigen::MatrixXd::Zero(n + m, n + m);
  Pext.topLeftCorner(n, n) = lqr.P;
  M += std::exp(-gamma * delta) * G.transpose() * Pext * G;
  return 0.5 * (M + M.transpose());
}

Eigen::VectorXd exact_q_weights(const LqrEnv& lqr, double delta, double gamma) {
  return quadratic_weights(exact_q_form(lqr, delta, gamma));
}

Eigen::VectorXd exact_v_weights(const LqrEnv& lqr) {
  return quadratic_weights(lqr.P);
}

Mdp chain_fixture() {
  Mdp mdp;
  mdp.actions.resize(4);
  mdp.actions[0] = {{1, 2}, {2, 10}};  // x0 -> C (2) | x0 -> K (10)
  mdp.actions[1] = {{3, 2}};           // C -> Y
  mdp.actions[2] = {{3, 10}};          // K -> Y
  mdp.actions[3] = {{3, 0}};           // Y self-loop
  return mdp;
}

}  // namespace qstack
