#include "qstack/costs.hpp"

#include <cmath>
#include <vector>

namespace qstack {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Reached: return "reached";
    case Termination::Timeout: return "timeout";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

double running_cost(const StageCost& sc, const State& x, const Action& u) {
  const long expected = sc.kind == RegressorKind::StateAction
                            ? x.size() + u.size()
                            : x.size();
  if (sc.r_diag.size() != expected) {
    throw ContractViolation("running_cost: regressor dimension mismatch");
  }
  double r = 0.0;
  for (long i = 0; i < x.size(); ++i) r += sc.r_diag[i] * x[i] * x[i];
  if (sc.kind == RegressorKind::StateAction) {
    for (long j = 0; j < u.size(); ++j) {
      r += sc.r_diag[x.size() + j] * u[j] * u[j];
    }
  }
  return r;
}

StageSegment stage_segment(const Dynamics& dyn, const StageCost& sc,
                           const State& x, const Action& u, double t_start,
                           double delta, double gamma, int substeps) {
  std::vector<State> grid;
  State end = integrate_step(dyn, x, u, delta, substeps, &grid);

  const double h = delta / substeps;
  double integral = 0.0;
  double prev = running_cost(sc, grid.front(), u);  // tau = 0, discount 1
  for (int s = 1; s <= substeps; ++s) {
    const double cur = std::exp(-gamma * h * s) * running_cost(sc, grid[s], u);
    integral += 0.5 * h * (prev + cur);
    prev = cur;
  }
  return {std::exp(-gamma * t_start) * integral, std::move(end)};
}

double stage_integral(const Dynamics& dyn, const StageCost& sc, const State& x,
                      const Action& u, double t_start, double delta,
                      double gamma, int substeps) {
  return stage_segment(dyn, sc, x, u, t_start, delta, gamma, substeps).cost;
}

double accumulate_episode(const EpisodeTrace& trace, double gamma) {
  if (trace.records.empty()) {
    throw ContractViolation("accumulate_episode: empty trace");
  }
  double total = 0.0;
  for (const TraceRecord& rec : trace.records) {
    total += std::exp(-gamma * (rec.t - trace.t0)) * rec.stage;
  }
  return total;
}

}  // namespace qstack
