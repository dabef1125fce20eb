#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qstack/costs.hpp"
#include "qstack/critics.hpp"
#include "qstack/dynamics.hpp"

namespace qstack {

/// Per-component action box U.
struct ActionBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Action& u, double slack = 1e-12) const;
  Action clamped(const Action& u) const;
};

/// The decision variable of every predictive agent: N-1 actions covering a
/// horizon of N sample instants.
struct ActionStack {
  std::vector<Action> actions;

  int horizon() const { return static_cast<int>(actions.size()) + 1; }
};

ActionStack zero_stack(int horizon, int action_dim);

/// Shifts the previous solution one interval forward, repeating the last
/// action: [u2, ..., uN-1, uN-1].
ActionStack warm_start_shift(const ActionStack& prev);

enum class AgentKind { Mpc, RlQ, RlQv, RlQc };

const char* to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& s);

/// Everything a horizon objective needs. MPC ignores the critics; RL-Q uses
/// w only; RL-QV and the complemented variant use w and v.
struct ObjectiveSpec {
  AgentKind kind = AgentKind::Mpc;
  const Dynamics* dyn = nullptr;
  const StageCost* cost = nullptr;
  double delta = 0.0;
  double gamma = 0.0;
  const CriticWeights* critics = nullptr;
};

/// Finite-horizon integral cost on the Euler prediction grid,
/// left-rectangle quadrature: sum_i delta * exp(-gamma*(i-1)*delta) *
/// r(x_i, u_i). Matches the prediction model's first-order accuracy.
double objective_mpc(const ObjectiveSpec& spec, const State& x,
                     const ActionStack& stack);

/// Stack of critic Q-values along the Euler-predicted states.
double objective_rlq(const ObjectiveSpec& spec, const State& x,
                     const ActionStack& stack);

/// objective_rlq plus the terminal cost-to-go estimate at the N-th state.
double objective_rlqv(const ObjectiveSpec& spec, const State& x,
                      const ActionStack& stack);

/// objective_rlqv plus the complement sum_i (N-i) * delta * r(x_i, u_i);
/// the delta factor keeps the complement commensurate with integrated
/// stage costs.
double objective_rlqv_complemented(const ObjectiveSpec& spec, const State& x,
                                   const ActionStack& stack);

/// Dispatch on spec.kind.
double stack_objective(const ObjectiveSpec& spec, const State& x,
                       const ActionStack& stack);

using StackObjective = std::function<double(const ActionStack&)>;

/// Bounded derivative-free local search: cyclic compass search with
/// per-component steps starting at a quarter of the box width, halved after
/// every sweep without strict improvement, terminating once every step
/// falls below 1e-4 of its box width or the evaluation budget runs out.
/// Deterministic; ties keep the incumbent; the result never has a higher
/// objective than init.
ActionStack optimize_stack(const StackObjective& objective,
                           const ActionStack& init, const ActionBounds& bounds,
                           int budget);

}  // namespace qstack
