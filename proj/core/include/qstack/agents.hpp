#pragma once

#include <functional>
#include <optional>
#include <string>

#include "qstack/actor.hpp"
#include "qstack/costs.hpp"
#include "qstack/critics.hpp"
#include "qstack/trace.hpp"

namespace qstack {

/// Which state components define "parked": the leading position block and
/// an optional orientation component.
struct StateLayout {
  int position_dims = 0;
  std::optional<int> angle_index{};
};

/// A concrete closed-loop task: plant, stage cost, admissible action box,
/// and the state layout used by the termination test. The target is the
/// origin. Immutable after construction.
struct EpisodeEnv {
  std::string name;
  Dynamics dyn;
  StageCost cost;
  ActionBounds bounds;
  StateLayout layout;
};

struct AgentConfig {
  AgentKind kind = AgentKind::Mpc;
  int horizon = 12;                 // N
  double delta = 0.1;               // sampling time [s]
  double gamma = 0.0;               // discount rate [1/s]
  int replay_capacity = 20;         // M
  double max_time = 30.0;           // episode timeout [s]
  double term_pos_radius = 0.05;    // [m]
  double term_angle_radius = 0.1;   // [rad]
  int optimizer_budget = 0;         // total evaluations; 0 = 200 * stack dim
  double ridge = 1e-8;
  int plant_substeps = 10;
  unsigned seed = 0;
  bool explore = false;             // optional zero-mean action perturbation
  double explore_scale = 0.0;       // fraction of box width, used if explore
};

int effective_budget(const AgentConfig& cfg, int action_dim);

/// One actor update: builds the horizon objective for cfg.kind,minimizes it
/// from the warm stack, and returns the first action plus the minimizer for
/// the next warm start. MPC never reads the critics.
std::pair<Action, ActionStack> agent_step(const AgentConfig& cfg,
                                          const EpisodeEnv& env,
                                          const CriticWeights& critics,
                                          const State& x,
                                          const ActionStack& warm);

/// Inspection hook invoked right after the critic update of each step.
using StepObserver =
    std::function<void(int step, const ReplayBuffer& buffer,
                       const CriticWeights& critics)>;

/// Runs one closed-loop episode from x0: per step, critic update (RL kinds,
/// once the replay window is full), actor update, plant integration, replay
/// push. Divergence is recorded as a termination reason, never thrown.
/// When `carry` is non-null it provides the initial critic weights and
/// receives the final ones; otherwise critics start at zero.
EpisodeTrace run_episode(const EpisodeEnv& env, const AgentConfig& cfg,
                         const State& x0, CriticWeights* carry = nullptr,
                         const StepObserver& observer = nullptr);

/// Columns: t,x,y,alpha,v,omega,stage,J_so_far (2-D action assumed for the
/// header names; higher-dimensional traces write numbered columns).
void write_trace_csv(const EpisodeTrace& trace, const std::string& path);

}  // namespace qstack
