#include "qstack/dynamics.hpp"

#include <cmath>

namespace qstack {

namespace {

bool finite_and_capped(const State& x) {
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceCap) return false;
  }
  return true;
}

}  // namespace

State integrate_step(const Dynamics& dyn, const State& x, const Action& u,
                     double delta, int substeps, std::vector<State>* grid) {
  if (delta <= 0.0) throw ContractViolation("integrate_step: delta must be > 0");
  if (substeps < 1) throw ContractViolation("integrate_step: substeps must be >= 1");

  const double h = delta / substeps;
  State cur = x;
  if (grid) {
    grid->clear();
    grid->reserve(substeps + 1);
    grid->push_back(cur);
  }
  for (int s = 0; s < substeps; ++s) {
    const State k1 = dyn.rhs(cur, u);
    const State k2 = dyn.rhs(cur + 0.5 * h * k1, u);
    const State k3 = dyn.rhs(cur + 0.5 * h * k2, u);
    const State k4 = dyn.rhs(cur + h * k3, u);
    cur = cur + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!finite_and_capped(cur)) {
      throw IntegrationDiverged("integrate_step: state left the admissible region", s);
    }
    if (grid) grid->push_back(cur);
  }
  return cur;
}

State euler_predict(const Dynamics& dyn, const State& x, const Action& u,
                    double delta) {
  if (delta <= 0.0) throw ContractViolation("euler_predict: delta must be > 0");
  State next = x + delta * dyn.rhs(x, u);
  if (!next.allFinite()) {
    throw PredictionDiverged("euler_predict: non-finite predicted state");
  }
  return next;
}

std::vector<State> predict_horizon(const Dynamics& dyn, const State& x,
                                   const std::vector<Action>& stack,
                                   double delta) {
  if (stack.empty()) {
    throw ContractViolation("predict_horizon: stack must hold at least one action");
  }
  std::vector<State> states;
  states.reserve(stack.size() + 1);
  states.push_back(x);
  for (const Action& u : stack) {
    states.push_back(euler_predict(dyn, states.back(), u, delta));
  }
  return states;
}

SampledTrajectory rollout_sampled(
    const Dynamics& dyn, const State& x0,
    const std::function<Action(const State&)>& policy, double delta,
    int steps, int substeps, bool record_substates) {
  if (steps < 1) throw ContractViolation("rollout_sampled: steps must be >= 1");

  SampledTrajectory traj;
  traj.t0 = 0.0;
  traj.delta = delta;
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);

  std::vector<State> grid;
  for (int k = 0; k < steps; ++k) {
    const Action u = policy(traj.states.back());
    State next;
    try {
      next = integrate_step(dyn, traj.states.back(), u, delta, substeps,
                            record_substates ? &grid : nullptr);
    } catch (const IntegrationDiverged& e) {
      throw IntegrationDiverged(
          "rollout_sampled: diverged at step " + std::to_string(k), e.substep());
    }
    traj.states.push_back(next);
    if (record_substates) traj.substates.push_back(grid);

    // Sample-and-hold trajectories stay inside a ball growing at the known
    // drift rate; a violation means the integrator or model is broken.
    if (dyn.drift_bound) {
      const auto& b = *dyn.drift_bound;
      const double moved =
          (next.head(b.leading_dims) - x0.head(b.leading_dims)).norm();
      const double allowed = b.rate * delta * (k + 1) + 1e-9;
      if (moved > allowed) {
        throw Error("rollout_sampled: drift bound violated at step " +
                    std::to_string(k) + " (moved " + std::to_string(moved) +
                    ", allowed " + std::to_string(allowed) + ")");
      }
    }
  }
  return traj;
}

}  // namespace qstack
