#include "qstack/actor.hpp"

#include <cmath>

namespace qstack {

bool ActionBounds::contains(const Action& u, double slack) const {
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] < lo[i] - slack || u[i] > hi[i] + slack) return false;
  }
  return true;
}

Action ActionBounds::clamped(const Action& u) const {
  return u.cwiseMax(lo).cwiseMin(hi);
}

ActionStack zero_stack(int horizon, int action_dim) {
  if (horizon < 2) throw ContractViolation("zero_stack: horizon must be >= 2");
  ActionStack s;
  s.actions.assign(horizon - 1, Action::Zero(action_dim));
  return s;
}

ActionStack warm_start_shift(const ActionStack& prev) {
  ActionStack out = prev;
  if (out.actions.size() < 2) return out;
  for (size_t i = 0; i + 1 < out.actions.size(); ++i) {
    out.actions[i] = prev.actions[i + 1];
  }
  out.actions.back() = prev.actions.back();
  return out;
}

const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Mpc: return "mpc";
    case AgentKind::RlQ: return "rlq";
    case AgentKind::RlQv: return "rlqv";
    case AgentKind::RlQc: return "rlqc";
  }
  return "unknown";
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "mpc") return AgentKind::Mpc;
  if (s == "rlq") return AgentKind::RlQ;
  if (s == "rlqv") return AgentKind::RlQv;
  if (s == "rlqc") return AgentKind::RlQc;
  throw ContractViolation("unknown agent kind: " + s);
}

double objective_mpc(const ObjectiveSpec& spec, const State& x,
                     const ActionStack& stack) {
  const auto states = predict_horizon(*spec.dyn, x, stack.actions, spec.delta);
  double total = 0.0;
  for (size_t i = 0; i < stack.actions.size(); ++i) {
    total += spec.delta * std::exp(-spec.gamma * spec.delta * i) *
             running_cost(*spec.cost, states[i], stack.actions[i]);
  }
  return total;
}

double objective_rlq(const ObjectiveSpec& spec, const State& x,
                     const ActionStack& stack) {
  const auto states = predict_horizon(*spec.dyn, x, stack.actions, spec.delta);
  double total = 0.0;
  for (size_t i = 0; i < stack.actions.size(); ++i) {
    total += q_hat(spec.critics->w, states[i], stack.actions[i]);
  }
  return total;
}

double objective_rlqv(const ObjectiveSpec& spec, const State& x,
                      const ActionStack& stack) {
  const auto states = predict_horizon(*spec.dyn, x, stack.actions, spec.delta);
  double total = 0.0;
  for (size_t i = 0; i < stack.actions.size(); ++i) {
    total += q_hat(spec.critics->w, states[i], stack.actions[i]);
  }
  return total + j_hat(spec.critics->v, states.back());
}

double objective_rlqv_complemented(const ObjectiveSpec& spec, const State& x,
                                   const ActionStack& stack) {
  const auto states = predict_horizon(*spec.dyn, x, stack.actions, spec.delta);
  const int N = stack.horizon();
  double total = j_hat(spec.critics->v, states.back());
  for (size_t i = 0; i < stack.actions.size(); ++i) {
    total += q_hat(spec.critics->w, states[i], stack.actions[i]);
    total += (N - 1.0 - i) * spec.delta *
             running_cost(*spec.cost, states[i], stack.actions[i]);
  }
  return total;
}

double stack_objective(const ObjectiveSpec& spec, const State& x,
                       const ActionStack& stack) {
  switch (spec.kind) {
    case AgentKind::Mpc: return objective_mpc(spec, x, stack);
    case AgentKind::RlQ: return objective_rlq(spec, x, stack);
    case AgentKind::RlQv: return objective_rlqv(spec, x, stack);
    case AgentKind::RlQc: return objective_rlqv_complemented(spec, x, stack);
  }
  throw ContractViolation("stack_objective: unknown agent kind");
}

ActionStack optimize_stack(const StackObjective& objective,
                           const ActionStack& init, const ActionBounds& bounds,
                           int budget) {
  const int m = bounds.dim();
  const int steps = static_cast<int>(init.actions.size());
  const int dim = steps * m;
  if (budget < dim) {
    throw ContractViolation("optimize_stack: budget below stack dimension");
  }

  ActionStack best = init;
  for (Action& a : best.actions) a = bounds.clamped(a);

  int evals = 0;
  double best_val = objective(best);
  ++evals;
  if (!std::isfinite(best_val)) {
    throw OptimizerFailed("optimize_stack: objective non-finite at init");
  }

  Eigen::VectorXd width = bounds.hi - bounds.lo;
  Eigen::VectorXd step = 0.25 * width;

  auto converged = [&] {
    for (int j = 0; j < m; ++j) {
      if (step[j] >= 1e-4 * width[j]) return false;
    }
    return true;
  };

  ActionStack trial = best;
  while (!converged() && evals < budget) {
    bool improved = false;
    for (int i = 0; i < steps && evals < budget; ++i) {
      for (int j = 0; j < m && evals < budget; ++j) {
        for (double sign : {1.0, -1.0}) {
          if (evals >= budget) break;
          const double moved = std::clamp(best.actions[i][j] + sign * step[j],
                                          bounds.lo[j], bounds.hi[j]);
          if (moved == best.actions[i][j]) continue;
          trial.actions[i] = best.actions[i];
          trial.actions[i][j] = moved;
          const double val = objective(trial);
          ++evals;
          if (std::isfinite(val) && val < best_val) {
            best.actions[i][j] = moved;
            best_val = val;
            improved = true;
            break;
          }
        }
        trial.actions[i] = best.actions[i];
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace qstack
