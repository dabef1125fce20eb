#include "qstack/agents.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "qstack/fmt.hpp"

namespace qstack {

int effective_budget(const AgentConfig& cfg, int action_dim) {
  const int dim = (cfg.horizon - 1) * action_dim;
  return cfg.optimizer_budget > 0 ? cfg.optimizer_budget : 200 * dim;
}

namespace {

bool uses_critics(AgentKind k) { return k != AgentKind::Mpc; }

bool at_target(const EpisodeEnv& env, const AgentConfig& cfg, const State& x) {
  if (env.layout.position_dims > 0 &&
      x.head(env.layout.position_dims).norm() >= cfg.term_pos_radius) {
    return false;
  }
  if (env.layout.angle_index &&
      std::abs(x[*env.layout.angle_index]) >= cfg.term_angle_radius) {
    return false;
  }
  return true;
}

}  // namespace

std::pair<Action, ActionStack> agent_step(const AgentConfig& cfg,
                                          const EpisodeEnv& env,
                                          const CriticWeights& critics,
                                          const State& x,
                                          const ActionStack& warm) {
  ObjectiveSpec spec;
  spec.kind = cfg.kind;
  spec.dyn = &env.dyn;
  spec.cost = &env.cost;
  spec.delta = cfg.delta;
  spec.gamma = cfg.gamma;
  spec.critics = uses_critics(cfg.kind) ? &critics : nullptr;

  const StackObjective objective = [&](const ActionStack& s) {
    return stack_objective(spec, x, s);
  };
  ActionStack opt = optimize_stack(objective, warm, env.bounds,
                                   effective_budget(cfg, env.bounds.dim()));
  return {opt.actions.front(), std::move(opt)};
}

EpisodeTrace run_episode(const EpisodeEnv& env, const AgentConfig& cfg,
                         const State& x0, CriticWeights* carry,
                         const StepObserver& observer) {
  if (cfg.horizon < 2 || cfg.delta <= 0.0 || cfg.replay_capacity < 2) {
    throw ContractViolation("run_episode: invalid agent config");
  }
  if (x0.size() != env.dyn.state_dim) {
    throw ContractViolation("run_episode: start state dimension mismatch");
  }

  const int n = env.dyn.state_dim;
  const int m = env.dyn.action_dim;
  const bool rl = uses_critics(cfg.kind);

  CriticWeights critics;
  if (rl) {
    if (carry && carry->w.size() > 0) {
      critics = *carry;
    } else {
      critics.w = Eigen::VectorXd::Zero(phi_q_dim(n, m));
      critics.v = Eigen::VectorXd::Zero(phi_v_dim(n));
    }
  }
  ReplayBuffer buffer(cfg.replay_capacity);

  // Pending transition: completed once the next action is chosen.
  struct Pending {
    State x;
    Action u;
    double stage;
    State x_next;
  };
  std::optional<Pending> pending;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  EpisodeTrace trace;
  trace.t0 = 0.0;
  trace.delta = cfg.delta;
  trace.gamma = cfg.gamma;
  trace.reason = Termination::Timeout;

  ActionStack warm = zero_stack(cfg.horizon, m);
  State x = x0;
  int k = 0;
  for (;; ++k) {
    const double t = cfg.delta * k;
    if (at_target(env, cfg, x)) {
      trace.reason = Termination::Reached;
      break;
    }
    if (t >= cfg.max_time - 1e-12) {
      trace.reason = Termination::Timeout;
      break;
    }

    if (rl && buffer.full()) {
      critics = critic_update(buffer, critics.w, critics.v, cfg.gamma,
                              cfg.delta, cfg.ridge);
      critics.step = k;
    }
    if (observer) observer(k, buffer, critics);

    auto [u, next_warm] = agent_step(cfg, env, critics, x, warm);
    if (cfg.explore && cfg.explore_scale > 0.0) {
      for (int j = 0; j < m; ++j) {
        u[j] += cfg.explore_scale * (env.bounds.hi[j] - env.bounds.lo[j]) *
                unit(rng);
      }
      u = env.bounds.clamped(u);
    }
    warm = warm_start_shift(next_warm);

    StageSegment seg;
    try {
      seg = stage_segment(env.dyn, env.cost, x, u, 0.0, cfg.delta, cfg.gamma,
                          cfg.plant_substeps);
    } catch (const IntegrationDiverged&) {
      trace.reason = Termination::Diverged;
      break;
    }

    trace.records.push_back({t, x, u, seg.cost});
    if (rl) {
      if (pending) {
        buffer.push({std::move(pending->x), std::move(pending->u),
                     std::move(pending->x_next), u, pending->stage});
      }
      pending = Pending{x, u, seg.cost, seg.end_state};
    }

    // Plants with a known drift rate must stay inside the growing ball.
    if (env.dyn.drift_bound) {
      const auto& b = *env.dyn.drift_bound;
      const double moved =
          (seg.end_state.head(b.leading_dims) - x0.head(b.leading_dims)).norm();
      if (moved > b.rate * cfg.delta * (k + 1) + 1e-9) {
        throw Error("run_episode: drift bound violated at step " +
                    std::to_string(k));
      }
    }

    x = seg.end_state;
  }

  trace.final_state = x;
  trace.final_time = cfg.delta * k;
  trace.total_cost =
      trace.records.empty() ? 0.0 : accumulate_episode(trace, cfg.gamma);
  if (rl && carry) *carry = critics;
  return trace;
}

void write_trace_csv(const EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_trace_csv: cannot write " + path);

  const int n = trace.records.empty()
                    ? static_cast<int>(trace.final_state.size())
                    : static_cast<int>(trace.records.front().state.size());
  const int m = trace.records.empty()
                    ? 0
                    : static_cast<int>(trace.records.front().action.size());
  if (n == 3 && m == 2) {
    out << "t,x,y,alpha,v,omega,stage,J_so_far\n";
  } else {
    out << "t";
    for (int i = 0; i < n; ++i) out << ",x" << i;
    for (int j = 0; j < m; ++j) out << ",u" << j;
    out << ",stage,J_so_far\n";
  }

  double running = 0.0;
  for (const TraceRecord& rec : trace.records) {
    running += std::exp(-trace.gamma * (rec.t - trace.t0)) * rec.stage;
    out << fmt_g(rec.t);
    for (int i = 0; i < n; ++i) out << "," << fmt_g(rec.state[i]);
    for (int j = 0; j < m; ++j) out << "," << fmt_g(rec.action[j]);
    out << "," << fmt_g(rec.stage) << "," << fmt_g(running) << "\n";
  }
  if (!out) throw IoError("write_trace_csv: write failed for " + path);
}

}  // namespace qstack
