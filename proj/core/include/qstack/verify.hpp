#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "qstack/actor.hpp"
#include "qstack/envs.hpp"

namespace qstack {

/// Outcome of one executable theorem check.
struct TheoremReport {
  enum class Verdict { Holds, Violated, AssumptionNotSatisfied };

  std::string theorem;
  std::string instance;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // |lhs - rhs|
  double tol = 0.0;
  Verdict verdict = Verdict::Holds;
};

const char* to_string(TheoremReport::Verdict v);
nlohmann::json to_json(const TheoremReport& r);

// --- Discrete (MDP) oracles --------------------------------------------------
//
// The sampled Q-function is replaced by its one-step discrete analogue
// Q(x, a) = c(x, a) + J*(next(x, a)) with J* the exact undiscounted optimal
// cost-to-go. Everything below runs in exact integer arithmetic.

/// Exact optimal cost-to-go by value iteration to the integer fixed point.
/// Throws OracleFailed if some state cannot reach a zero-cost cycle.
std::vector<long long> optimal_cost_to_go(const Mdp& mdp);

struct StackedMinResult {
  long long value = 0;
  std::vector<int> actions;  // lexicographically first minimizer
};

/// Exhaustive minimum of  sum_i Q(x_i, a_i) + J*(x_N)  over all action
/// sequences of length N-1 from x0. Guard: at most 10^6 sequences.
StackedMinResult brute_force_stacked_min(const Mdp& mdp, int x0, int N);

/// Greedy per-step minimization of Q plus the terminal J* along the
/// realized trajectory (ties resolved toward the lowest action index).
/// Never below brute_force_stacked_min.
long long elementwise_min_sum(const Mdp& mdp, int x0, int N);

/// Stack-vs-elementwise identity under the summed-cost-to-go assumption,
/// which is verified by enumerating every trajectory. When the assumption
/// fails the min-of-sum <= sum-of-min inequality is still checked.
TheoremReport check_theorem1(const Mdp& mdp, int x0, int N, double tol = 0.0);

/// Complemented-stack optimality: the minimizer of
///   sum_i Q(x_i, a_i) + J*(x_N) + sum_i (N-i) c(x_i, a_i)
/// must realize the Bellman-optimal total cost. No assumption needed.
TheoremReport check_theorem3(const Mdp& mdp, int x0, int N, double tol = 0.0);

/// Deterministic MDP with uniform integer costs in [0, 9]. State 0 is a
/// zero-cost absorbing goal and action 0 of state s leads below s, so the
/// optimal cost-to-go is always finite.
Mdp random_mdp(unsigned seed, int n_states = 5, int n_actions = 3);

// --- Continuous LQR diagnostics ----------------------------------------------

/// Uniform per-component action grid over [lo, hi], `levels` per component,
/// cartesian product across components.
std::vector<Action> action_grid(const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, int levels);

namespace detail {

/// Finite-horizon grid-action stack problem over a linear plant:
/// minimize/maximize  sum_i z_i' M z_i + x_N' P_term x_N  with
/// x_{i+1} = Ad x_i + Bd u_i and u_i drawn from a finite action set.
struct GridStackProblem {
  Eigen::MatrixXd Ad, Bd;
  Eigen::MatrixXd M;       // stage form over z = [x; u]
  Eigen::MatrixXd P_term;  // terminal form over x
  std::vector<Action> actions;
  int steps = 0;  // number of actions in a sequence (N-1)
};

struct GridDpOptions {
  double merge_quantum = 1e-9;    // state dedup resolution
  std::size_t level_cap = 6'000'000;
  int threads = 0;                // 0 = hardware
};

/// Exact minimum via level dynamic programming with state deduplication and
/// Riccati-relaxation pruning. States reached by distinct action prefixes
/// dedup only when they coincide to merge_quantum, which is far below the
/// spacing of genuinely distinct reachable states for the plants used here.
/// Throws EnumerationTooLarge if a level exceeds level_cap entries.
double grid_stack_min(const GridStackProblem& p, const State& x0,
                      const GridDpOptions& opt = {});

/// Exact maximum. The objective is convex in the action sequence, so the
/// caller may restrict `actions` to the box corners without changing the
/// result; this routine enumerates whatever set it is given.
double grid_stack_max(const GridStackProblem& p, const State& x0,
                      const GridDpOptions& opt = {});

/// Plain DFS enumeration (cross-check oracle). Guard: 10^6 sequences.
double grid_stack_enumerate(const GridStackProblem& p, const State& x0);

/// Greedy per-step minimizer value: sum of per-step minima of z'Mz along
/// the realized trajectory plus the terminal form.
double grid_elementwise_min(const GridStackProblem& p, const State& x0);

}  // namespace detail

/// One row of the sampling-time sweep at fixed total lookahead.
struct SweepPoint {
  double delta = 0.0;
  int steps = 0;          // N-1
  double stack_min = 0.0;
  double elementwise = 0.0;
  double gap = 0.0;       // stack_min - elementwise, <= 0 always
  double bound = 0.0;     // 2 e^-gamma rbar (N-1) delta + 2 N omega_V(N delta fbar)
};

/// For each delta (horizon count adjusted so that (N-1)*delta = lookahead)
/// computes the exact grid-action gap between the stack minimum and the
/// sum of elementwise minima, using the exact one-interval Q-form.
std::vector<SweepPoint> delta_sweep_gap(const LqrEnv& lqr, const State& x0,
                                        double lookahead,
                                        const std::vector<double>& deltas,
                                        const Eigen::VectorXd& u_lo,
                                        const Eigen::VectorXd& u_hi,
                                        int levels = 5, double gamma = 0.0);

/// Action-information content of the one-interval Q-function vs the stack.
struct CollapseRow {
  double delta = 0.0;
  double spread_q = 0.0;      // max_u Q(x,u) - min_u Q(x,u) on the grid
  double spread_stack = 0.0;  // same for the N-term stack, N = ceil(a/delta)
};

std::vector<CollapseRow> q_collapse_diagnostic(
    const LqrEnv& lqr, const State& x, const std::vector<double>& deltas,
    const Eigen::VectorXd& u_lo, const Eigen::VectorXd& u_hi, int levels = 5,
    double window = 1.0, double gamma = 0.0);

/// Identity between the exact-critic Q-stack and the integral cost plus the
/// chained cost-to-go terms, both sides evaluated on the same
/// fine-quadrature trajectory.
TheoremReport decomposition_check(const LqrEnv& lqr, const State& x_k,
                                  const ActionStack& stack, double delta,
                                  int N, double tol, double gamma = 0.0);

/// Full oracle battery for the CLI: fixture + seeded random theorem checks,
/// the delta sweep, the collapse diagnostic, and decomposition spot checks.
std::vector<TheoremReport> run_all_checks();

}  // namespace qstack
