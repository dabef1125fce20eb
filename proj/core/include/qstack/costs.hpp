#pragma once

#include <Eigen/Dense>

#include "qstack/dynamics.hpp"
#include "qstack/trace.hpp"

namespace qstack {

/// Which regressor the quadratic form runs over.
enum class RegressorKind { StateAction, StateOnly };

/// Quadratic stage cost r(x, u) = chi' diag(r_diag) chi with
/// chi = [x; u] (StateAction) or chi = x (StateOnly). All diagonal entries
/// must be strictly positive, so r >= 0 and r(0, 0) = 0.
struct StageCost {
  Eigen::VectorXd r_diag;
  RegressorKind kind = RegressorKind::StateAction;
};

double running_cost(const StageCost& sc, const State& x, const Action& u);

/// Integral of the discounted stage cost over one held interval together
/// with the integrated end state. Shares the RK4 sub-grid with
/// integrate_step, so re-running it reproduces the successor bit-exactly.
struct StageSegment {
  double cost = 0.0;
  State end_state;
};

/// Approximates  exp(-gamma*t_start) * \int_0^delta exp(-gamma*tau)
/// r(x(tau), u) dtau  along the trajectory of x' = rhs(x, u) with u held,
/// trapezoidal rule on the RK4 sub-grid. gamma is per-second; t_start is
/// measured from the episode start (pass 0 for interval-relative values).
double stage_integral(const Dynamics& dyn, const StageCost& sc, const State& x,
                      const Action& u, double t_start, double delta,
                      double gamma, int substeps);

/// Same quadrature pass as stage_integral but also returns x(delta).
StageSegment stage_segment(const Dynamics& dyn, const StageCost& sc,
                           const State& x, const Action& u, double t_start,
                           double delta, double gamma, int substeps);

/// Accumulated episode cost: sum of per-interval stage integrals chained
/// with the episode-relative discount exp(-gamma*(t_k - t0)). The records'
/// stage values are interval-relative, so gamma = 0 is a plain sum.
double accumulate_episode(const EpisodeTrace& trace, double gamma);

}  // namespace qstack
