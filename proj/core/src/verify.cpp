#include "qstack/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <unordered_map>

#include "qstack/costs.hpp"
#include "qstack/critics.hpp"

namespace qstack {

const char* to_string(TheoremReport::Verdict v) {
  switch (v) {
    case TheoremReport::Verdict::Holds: return "holds";
    case TheoremReport::Verdict::Violated: return "violated";
    case TheoremReport::Verdict::AssumptionNotSatisfied:
      return "assumption-not-satisfied";
  }
  return "unknown";
}

nlohmann::json to_json(const TheoremReport& r) {
  return nlohmann::json{{"theorem", r.theorem}, {"instance", r.instance},
                        {"lhs", r.lhs},         {"rhs", r.rhs},
                        {"gap", r.gap},         {"tol", r.tol},
                        {"verdict", to_string(r.verdict)}};
}

// --- MDP oracles -------------------------------------------------------------

std::vector<long long> optimal_cost_to_go(const Mdp& mdp) {
  const int n = mdp.num_states();
  long long max_cost = 0;
  for (const auto& arcs : mdp.actions) {
    if (arcs.empty()) throw ContractViolation("optimal_cost_to_go: state without actions");
    for (const auto& a : arcs) {
      if (a.next < 0 || a.next >= n) {
        throw ContractViolation("optimal_cost_to_go: dangling successor");
      }
      max_cost = std::max(max_cost, a.cost);
    }
  }
  // Finite J* is at most (n-1)*max_cost; monotone integer iteration must
  // reach its fixed point within that many unit increases per state.
  const long long cap = (n - 1) * max_cost;
  std::vector<long long> J(n, 0), Jn(n, 0);
  const long long max_iters = static_cast<long long>(n) * (cap + 2) + 2;
  for (long long it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (int s = 0; s < n; ++s) {
      long long best = std::numeric_limits<long long>::max();
      for (const auto& a : mdp.actions[s]) {
        best = std::min(best, a.cost + J[a.next]);
      }
      Jn[s] = best;
      changed = changed || (Jn[s] != J[s]);
    }
    J = Jn;
    if (!changed) return J;
    for (int s = 0; s < n; ++s) {
      if (J[s] > cap) {
        throw OracleFailed("optimal_cost_to_go: no zero-cost cycle reachable from state " +
                           std::to_string(s));
      }
    }
  }
  throw OracleFailed("optimal_cost_to_go: value iteration did not settle");
}

namespace {

// Shared enumeration pass over all action sequences of length N-1.
// Tracks whatever the theorem checks need in one sweep.
struct EnumStats {
  long long stack_min = std::numeric_limits<long long>::max();
  std::vector<int> stack_argmin;
  long long total_min = std::numeric_limits<long long>::max();  // path + J*(term)
  long long complemented_min = std::numeric_limits<long long>::max();
  std::vector<int> complemented_argmin;
  long long complemented_argmin_total = 0;
  long long interior_jsum_min = std::numeric_limits<long long>::max();
};

void enumeration_guard(const Mdp& mdp, int N) {
  std::size_t max_branch = 0;
  for (const auto& arcs : mdp.actions) max_branch = std::max(max_branch, arcs.size());
  double count = 1.0;
  for (int i = 0; i < N - 1; ++i) count *= static_cast<double>(max_branch);
  if (count > 1e6) {
    throw EnumerationTooLarge("mdp enumeration: |actions|^(N-1) exceeds 1e6");
  }
}

void enumerate_rec(const Mdp& mdp, const std::vector<long long>& J, int N,
                   int depth, int state, long long stack, long long path,
                   long long complemented, long long jsum,
                   std::vector<int>& seq, EnumStats& st) {
  if (depth == N - 1) {
    const long long total = path + J[state];
    const long long stack_total = stack + J[state];
    const long long comp_total = complemented + J[state];
    if (stack_total < st.stack_min) {
      st.stack_min = stack_total;
      st.stack_argmin = seq;
    }
    st.total_min = std::min(st.total_min, total);
    if (comp_total < st.complemented_min) {
      st.complemented_min = comp_total;
      st.complemented_argmin = seq;
      st.complemented_argmin_total = total;
    }
    st.interior_jsum_min = std::min(st.interior_jsum_min, jsum + J[state]);
    return;
  }
  const int weight = N - 1 - depth;  // complement coefficient for this step
  for (int a = 0; a < static_cast<int>(mdp.actions[state].size()); ++a) {
    const auto& arc = mdp.actions[state][a];
    seq.push_back(a);
    enumerate_rec(mdp, J, N, depth + 1, arc.next,
                  stack + arc.cost + J[arc.next], path + arc.cost,
                  complemented + arc.cost + J[arc.next] +
                      static_cast<long long>(weight) * arc.cost,
                  jsum + J[arc.next], seq, st);
    seq.pop_back();
  }
}

EnumStats enumerate_all(const Mdp& mdp, const std::vector<long long>& J,
                        int x0, int N) {
  enumeration_guard(mdp, N);
  EnumStats st;
  std::vector<int> seq;
  enumerate_rec(mdp, J, N, 0, x0, 0, 0, 0, 0, seq, st);
  return st;
}

struct GreedyWalk {
  long long value = 0;        // sum of per-step minima + terminal J*
  long long interior_jsum = 0;  // J* over visited states 2..N (terminal incl.)
};

GreedyWalk greedy_walk(const Mdp& mdp, const std::vector<long long>& J, int x0,
                       int N) {
  GreedyWalk out;
  int state = x0;
  for (int i = 0; i < N - 1; ++i) {
    long long best = std::numeric_limits<long long>::max();
    int best_next = -1;
    for (const auto& arc : mdp.actions[state]) {
      const long long q = arc.cost + J[arc.next];
      if (q < best) {
        best = q;
        best_next = arc.next;
      }
    }
    out.value += best;
    state = best_next;
    out.interior_jsum += J[state];
  }
  out.value += J[state];
  return out;
}

}  // namespace

StackedMinResult brute_force_stacked_min(const Mdp& mdp, int x0, int N) {
  if (N < 2) throw ContractViolation("brute_force_stacked_min: N must be >= 2");
  const auto J = optimal_cost_to_go(mdp);
  const EnumStats st = enumerate_all(mdp, J, x0, N);
  return {st.stack_min, st.stack_argmin};
}

long long elementwise_min_sum(const Mdp& mdp, int x0, int N) {
  if (N < 2) throw ContractViolation("elementwise_min_sum: N must be >= 2");
  const auto J = optimal_cost_to_go(mdp);
  return greedy_walk(mdp, J, x0, N).value;
}

TheoremReport check_theorem1(const Mdp& mdp, int x0, int N, double tol) {
  const auto J = optimal_cost_to_go(mdp);
  const EnumStats st = enumerate_all(mdp, J, x0, N);
  const GreedyWalk greedy = greedy_walk(mdp, J, x0, N);

  TheoremReport rep;
  rep.theorem = "theorem1";
  rep.lhs = static_cast<double>(st.stack_min);
  rep.rhs = static_cast<double>(greedy.value);
  rep.gap = std::abs(rep.lhs - rep.rhs);
  rep.tol = tol;

  if (st.stack_min > greedy.value) {
    rep.verdict = TheoremReport::Verdict::Violated;  // breaks min-of-sum <= sum-of-min
    return rep;
  }
  const bool assumption = greedy.interior_jsum <= st.interior_jsum_min;
  if (!assumption) {
    rep.verdict = TheoremReport::Verdict::AssumptionNotSatisfied;
    return rep;
  }
  rep.verdict = rep.gap <= tol ? TheoremReport::Verdict::Holds
                               : TheoremReport::Verdict::Violated;
  return rep;
}

TheoremReport check_theorem3(const Mdp& mdp, int x0, int N, double tol) {
  const auto J = optimal_cost_to_go(mdp);
  const EnumStats st = enumerate_all(mdp, J, x0, N);

  TheoremReport rep;
  rep.theorem = "theorem3";
  rep.lhs = static_cast<double>(st.complemented_argmin_total);
  rep.rhs = static_cast<double>(st.total_min);
  rep.gap = std::abs(rep.lhs - rep.rhs);
  rep.tol = tol;
  rep.verdict = rep.gap <= tol ? TheoremReport::Verdict::Holds
                               : TheoremReport::Verdict::Violated;
  return rep;
}

Mdp random_mdp(unsigned seed, int n_states, int n_actions) {
  if (n_states < 2 || n_actions < 1) {
    throw ContractViolation("random_mdp: need >= 2 states and >= 1 action");
  }
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> cost(0, 9);
  std::uniform_int_distribution<int> any_state(0, n_states - 1);

  Mdp mdp;
  mdp.actions.resize(n_states);
  for (int a = 0; a < n_actions; ++a) mdp.actions[0].push_back({0, 0});
  for (int s = 1; s < n_states; ++s) {
    std::uniform_int_distribution<int> below(0, s - 1);
    mdp.actions[s].push_back({below(rng), cost(rng)});  // keeps J* finite
    for (int a = 1; a < n_actions; ++a) {
      mdp.actions[s].push_back({any_state(rng), cost(rng)});
    }
  }
  return mdp;
}

// --- Grid-action stack optimization ------------------------------------------

std::vector<Action> action_grid(const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, int levels) {
  if (levels < 2) throw ContractViolation("action_grid: need >= 2 levels");
  const int m = static_cast<int>(lo.size());
  std::vector<Action> grid;
  std::vector<int> idx(m, 0);
  while (true) {
    Action u(m);
    for (int j = 0; j < m; ++j) {
      u[j] = lo[j] + (hi[j] - lo[j]) * idx[j] / (levels - 1);
    }
    grid.push_back(u);
    int j = m - 1;
    while (j >= 0 && ++idx[j] == levels) idx[j--] = 0;
    if (j < 0) break;
  }
  return grid;
}

namespace detail {
namespace {

constexpr int kMaxDim = 4;

struct Key {
  std::array<std::int64_t, kMaxDim> q{};
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::int64_t v : k.q) {
      std::uint64_t x = static_cast<std::uint64_t>(v);
      x ^= x >> 30;
      x *= 0xbf58476d1ce4e5b9ull;
      x ^= x >> 27;
      x *= 0x94d049bb133111ebull;
      x ^= x >> 31;
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

struct Node {
  std::array<double, kMaxDim> x{};
  double value = 0.0;  // best prefix cost (min or max depending on mode)
};

using Level = std::unordered_map<Key, Node, KeyHash>;

struct SmallProblem {
  int n = 0, m = 0, steps = 0;
  double Ad[kMaxDim][kMaxDim] = {};
  double Mxx[kMaxDim][kMaxDim] = {};
  double Pterm[kMaxDim][kMaxDim] = {};
  // Per action: Bd*u, 2*Mxu*u, u'Muu u.
  struct PerAction {
    std::array<double, kMaxDim> bu{};
    std::array<double, kMaxDim> h{};
    double c = 0.0;
  };
  std::vector<PerAction> acts;
};

SmallProblem compile(const GridStackProblem& p) {
  const int n = static_cast<int>(p.Ad.rows());
  const int m = static_cast<int>(p.Bd.cols());
  if (n > kMaxDim) throw ContractViolation("grid stack: state dim above 4 unsupported");
  if (p.steps < 1) throw ContractViolation("grid stack: need >= 1 step");

  SmallProblem sp;
  sp.n = n;
  sp.m = m;
  sp.steps = p.steps;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      sp.Ad[i][j] = p.Ad(i, j);
      sp.Mxx[i][j] = p.M(i, j);
      sp.Pterm[i][j] = p.P_term(i, j);
    }
  }
  const Eigen::MatrixXd Mxu = p.M.topRightCorner(n, m);
  const Eigen::MatrixXd Muu = p.M.bottomRightCorner(m, m);
  sp.acts.reserve(p.actions.size());
  for (const Action& u : p.actions) {
    SmallProblem::PerAction pa;
    const Eigen::VectorXd bu = p.Bd * u;
    const Eigen::VectorXd h = 2.0 * Mxu * u;
    for (int i = 0; i < n; ++i) {
      pa.bu[i] = bu[i];
      pa.h[i] = h[i];
    }
    pa.c = u.dot(Muu * u);
    sp.acts.push_back(pa);
  }
  return sp;
}

double quad(const double Q[kMaxDim][kMaxDim], const std::array<double, kMaxDim>& x,
            int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s += x[i] * Q[i][j] * x[j];
  }
  return s;
}

std::array<double, kMaxDim> advance(const SmallProblem& sp,
                                    const std::array<double, kMaxDim>& x,
                                    const SmallProblem::PerAction& pa) {
  std::array<double, kMaxDim> next{};
  for (int i = 0; i < sp.n; ++i) {
    double s = pa.bu[i];
    for (int j = 0; j < sp.n; ++j) s += sp.Ad[i][j] * x[j];
    next[i] = s;
  }
  return next;
}

double stage_cost(const SmallProblem& sp, const std::array<double, kMaxDim>& x,
                  double qx, const SmallProblem::PerAction& pa) {
  double s = qx + pa.c;
  for (int i = 0; i < sp.n; ++i) s += pa.h[i] * x[i];
  return s;
}

Key make_key(const std::array<double, kMaxDim>& x, int n, double quantum) {
  Key k;
  for (int i = 0; i < n; ++i) {
    k.q[i] = static_cast<std::int64_t>(std::llround(x[i] / quantum));
  }
  return k;
}

// Value forms of the unbounded-action relaxation, tail_k >= x'S_k x.
std::vector<Eigen::MatrixXd> relaxation_tail(const GridStackProblem& p) {
  const int n = static_cast<int>(p.Ad.rows());
  const int m = static_cast<int>(p.Bd.cols());
  Eigen::MatrixXd AB(n, n + m);
  AB << p.Ad, p.Bd;
  std::vector<Eigen::MatrixXd> S(p.steps + 1);
  S[0] = p.P_term;
  for (int k = 1; k <= p.steps; ++k) {
    const Eigen::MatrixXd T = p.M + AB.transpose() * S[k - 1] * AB;
    const Eigen::MatrixXd Txx = T.topLeftCorner(n, n);
    const Eigen::MatrixXd Txu = T.topRightCorner(n, m);
    const Eigen::MatrixXd Tuu = T.bottomRightCorner(m, m);
    Eigen::MatrixXd Sk = Txx - Txu * Tuu.ldlt().solve(Txu.transpose());
    S[k] = 0.5 * (Sk + Sk.transpose());
  }
  return S;
}

std::array<double, kMaxDim> to_arr(const State& x, int n) {
  std::array<double, kMaxDim> a{};
  for (int i = 0; i < n; ++i) a[i] = x[i];
  return a;
}

double seq_value(const SmallProblem& sp, const std::array<double, kMaxDim>& x0,
                 const std::vector<int>& seq) {
  std::array<double, kMaxDim> x = x0;
  double total = 0.0;
  for (int s = 0; s < sp.steps; ++s) {
    const auto& pa = sp.acts[seq[s]];
    total += stage_cost(sp, x, quad(sp.Mxx, x, sp.n), pa);
    x = advance(sp, x, pa);
  }
  return total + quad(sp.Pterm, x, sp.n);
}

// Feasible upper bound: greedy by stage-plus-relaxed-tail, polished by
// deterministic coordinate descent over the sequence.
double incumbent_value(const SmallProblem& sp, const GridStackProblem& p,
                       const std::array<double, kMaxDim>& x0,
                       const std::vector<Eigen::MatrixXd>& S) {
  std::vector<double> Sarr((sp.steps + 1) * kMaxDim * kMaxDim, 0.0);
  auto Sat = [&](int k, int i, int j) -> double& {
    return Sarr[(static_cast<std::size_t>(k) * kMaxDim + i) * kMaxDim + j];
  };
  for (int k = 0; k <= sp.steps; ++k) {
    for (int i = 0; i < sp.n; ++i) {
      for (int j = 0; j < sp.n; ++j) Sat(k, i, j) = S[k](i, j);
    }
  }

  std::vector<int> seq(sp.steps, 0);
  std::array<double, kMaxDim> x = x0;
  for (int s = 0; s < sp.steps; ++s) {
    const int k_rem = sp.steps - s - 1;
    const double qx = quad(sp.Mxx, x, sp.n);
    double best = std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < static_cast<int>(sp.acts.size()); ++a) {
      const auto next = advance(sp, x, sp.acts[a]);
      double tail = 0.0;
      for (int i = 0; i < sp.n; ++i) {
        for (int j = 0; j < sp.n; ++j) tail += next[i] * Sat(k_rem, i, j) * next[j];
      }
      const double v = stage_cost(sp, x, qx, sp.acts[a]) + tail;
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    seq[s] = best_a;
    x = advance(sp, x, sp.acts[best_a]);
  }

  double best_val = seq_value(sp, x0, seq);
  for (int sweep = 0; sweep < 64; ++sweep) {
    bool improved = false;
    for (int s = 0; s < sp.steps; ++s) {
      const int keep = seq[s];
      for (int a = 0; a < static_cast<int>(sp.acts.size()); ++a) {
        if (a == keep) continue;
        seq[s] = a;
        const double v = seq_value(sp, x0, seq);
        if (v < best_val) {
          best_val = v;
          improved = true;
        } else {
          seq[s] = keep;
        }
        if (seq[s] == a && v >= best_val + 0.0) {
          // kept only on strict improvement above
        }
      }
    }
    if (!improved) break;
  }
  (void)p;
  return best_val;
}

}  // namespace

double grid_stack_min(const GridStackProblem& p, const State& x0,
                      const GridDpOptions& opt) {
  const SmallProblem sp = compile(p);
  const auto S = relaxation_tail(p);
  const auto x0a = to_arr(x0, sp.n);
  double incumbent = incumbent_value(sp, p, x0a, S);

  std::vector<double> Sarr((sp.steps + 1) * kMaxDim * kMaxDim, 0.0);
  for (int k = 0; k <= sp.steps; ++k) {
    for (int i = 0; i < sp.n; ++i) {
      for (int j = 0; j < sp.n; ++j) {
        Sarr[(static_cast<std::size_t>(k) * kMaxDim + i) * kMaxDim + j] = S[k](i, j);
      }
    }
  }

  Level level;
  level.emplace(make_key(x0a, sp.n, opt.merge_quantum), Node{x0a, 0.0});

  double best = std::numeric_limits<double>::infinity();
  Level next_level;
  for (int s = 0; s < sp.steps; ++s) {
    const int k_rem = sp.steps - s - 1;
    const double* Sk = &Sarr[static_cast<std::size_t>(k_rem) * kMaxDim * kMaxDim];
    next_level.clear();
    for (const auto& [key, node] : level) {
      const double qx = quad(sp.Mxx, node.x, sp.n);
      for (const auto& pa : sp.acts) {
        const double pref = node.value + stage_cost(sp, node.x, qx, pa);
        const auto next = advance(sp, node.x, pa);
        if (s == sp.steps - 1) {
          const double total = pref + quad(sp.Pterm, next, sp.n);
          best = std::min(best, total);
          continue;
        }
        double lb = pref;
        for (int i = 0; i < sp.n; ++i) {
          double row = 0.0;
          for (int j = 0; j < sp.n; ++j) row += Sk[i * kMaxDim + j] * next[j];
          lb += next[i] * row;
        }
        if (lb >= incumbent) continue;  // cannot strictly beat a feasible value
        const Key nk = make_key(next, sp.n, opt.merge_quantum);
        auto [it, inserted] = next_level.try_emplace(nk, Node{next, pref});
        if (!inserted && pref < it->second.value) {
          it->second = Node{next, pref};
        }
      }
    }
    if (s == sp.steps - 1) break;
    if (next_level.size() > opt.level_cap) {
      throw EnumerationTooLarge("grid_stack_min: level exceeded cap of " +
                                std::to_string(opt.level_cap));
    }
    level.swap(next_level);
    if (level.empty()) return incumbent;  // everything pruned: incumbent optimal
  }
  return std::min(best, incumbent);
}

double grid_stack_max(const GridStackProblem& p, const State& x0,
                      const GridDpOptions& opt) {
  const SmallProblem sp = compile(p);
  const auto x0a = to_arr(x0, sp.n);

  Level level;
  level.emplace(make_key(x0a, sp.n, opt.merge_quantum), Node{x0a, 0.0});

  double best = -std::numeric_limits<double>::infinity();
  Level next_level;
  for (int s = 0; s < sp.steps; ++s) {
    next_level.clear();
    for (const auto& [key, node] : level) {
      const double qx = quad(sp.Mxx, node.x, sp.n);
      for (const auto& pa : sp.acts) {
        const double pref = node.value + stage_cost(sp, node.x, qx, pa);
        const auto next = advance(sp, node.x, pa);
        if (s == sp.steps - 1) {
          best = std::max(best, pref + quad(sp.Pterm, next, sp.n));
          continue;
        }
        const Key nk = make_key(next, sp.n, opt.merge_quantum);
        auto [it, inserted] = next_level.try_emplace(nk, Node{next, pref});
        if (!inserted && pref > it->second.value) {
          it->second = Node{next, pref};
        }
      }
    }
    if (s == sp.steps - 1) break;
    if (next_level.size() > opt.level_cap) {
      throw EnumerationTooLarge("grid_stack_max: level exceeded cap of " +
                                std::to_string(opt.level_cap));
    }
    level.swap(next_level);
  }
  return best;
}

double grid_stack_enumerate(const GridStackProblem& p, const State& x0) {
  const SmallProblem sp = compile(p);
  double count = 1.0;
  for (int s = 0; s < sp.steps; ++s) count *= static_cast<double>(sp.acts.size());
  if (count > 1e6) {
    throw EnumerationTooLarge("grid_stack_enumerate: |grid|^steps exceeds 1e6");
  }
  const auto x0a = to_arr(x0, sp.n);
  std::vector<int> seq(sp.steps, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, seq_value(sp, x0a, seq));
    int s = sp.steps - 1;
    while (s >= 0 && ++seq[s] == static_cast<int>(sp.acts.size())) seq[s--] = 0;
    if (s < 0) break;
  }
  return best;
}

double grid_elementwise_min(const GridStackProblem& p, const State& x0) {
  const SmallProblem sp = compile(p);
  std::array<double, kMaxDim> x = to_arr(x0, sp.n);
  double total = 0.0;
  for (int s = 0; s < sp.steps; ++s) {
    const double qx = quad(sp.Mxx, x, sp.n);
    double best = std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < static_cast<int>(sp.acts.size()); ++a) {
      const double v = stage_cost(sp, x, qx, sp.acts[a]);
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    total += best;
    x = advance(sp, x, sp.acts[best_a]);
  }
  return total + quad(sp.Pterm, x, sp.n);
}

}  // namespace detail

// --- Sweeps -------------------------------------------------------------------

namespace {

detail::GridStackProblem make_problem(const LqrEnv& lqr, double delta,
                                      double gamma, int steps,
                                      const std::vector<Action>& grid,
                                      bool with_terminal) {
  detail::GridStackProblem p;
  lqr_discretize(lqr, delta, &p.Ad, &p.Bd);
  p.M = exact_q_form(lqr, delta, gamma);
  p.P_term = with_terminal
                 ? lqr.P
                 : Eigen::MatrixXd::Zero(lqr.state_dim(), lqr.state_dim()).eval();
  p.actions = grid;
  p.steps = steps;
  return p;
}

double theorem2_bound(const LqrEnv& lqr, const detail::GridStackProblem& p,
                      const State& x0, double delta, double gamma) {
  // Rigorous over-approximation of the proof quantities over the reachable
  // tube: rho bounds every visited state, fbar the drift, rbar the stage
  // cost, omega the modulus of continuity of x'Px on the rho-ball.
  const double nAd = p.Ad.operatorNorm();
  double bu_max = 0.0, u_r_max = 0.0, u_norm_max = 0.0;
  for (const Action& u : p.actions) {
    bu_max = std::max(bu_max, (p.Bd * u).norm());
    u_r_max = std::max(u_r_max, u.dot(lqr.R_cost * u));
    u_norm_max = std::max(u_norm_max, (lqr.B * u).norm());
  }
  double rho = x0.norm(), r = rho;
  for (int k = 0; k < p.steps; ++k) {
    r = nAd * r + bu_max;
    rho = std::max(rho, r);
  }
  const double lam_q = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lqr.Q_cost)
                           .eigenvalues()
                           .maxCoeff();
  const double lam_p = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lqr.P)
                           .eigenvalues()
                           .maxCoeff();
  const double fbar = lqr.A.operatorNorm() * rho + u_norm_max;
  const double rbar = lam_q * rho * rho + u_r_max;
  const int N = p.steps + 1;
  const double move = N * delta * fbar;
  const double omega = lam_p * move * (2.0 * rho + move);
  return 2.0 * std::exp(-gamma) * rbar * p.steps * delta + 2.0 * N * omega;
}

}  // namespace

std::vector<SweepPoint> delta_sweep_gap(const LqrEnv& lqr, const State& x0,
                                        double lookahead,
                                        const std::vector<double>& deltas,
                                        const Eigen::VectorXd& u_lo,
                                        const Eigen::VectorXd& u_hi, int levels,
                                        double gamma) {
  const auto grid = action_grid(u_lo, u_hi, levels);
  std::vector<SweepPoint> out;
  for (double delta : deltas) {
    const int steps = std::max(1, static_cast<int>(std::llround(lookahead / delta)));
    const auto p = make_problem(lqr, delta, gamma, steps, grid, true);
    SweepPoint pt;
    pt.delta = delta;
    pt.steps = steps;
    pt.stack_min = detail::grid_stack_min(p, x0);
    pt.elementwise = detail::grid_elementwise_min(p, x0);
    pt.gap = pt.stack_min - pt.elementwise;
    pt.bound = theorem2_bound(lqr, p, x0, delta, gamma);
    out.push_back(pt);
  }
  return out;
}

std::vector<CollapseRow> q_collapse_diagnostic(
    const LqrEnv& lqr, const State& x, const std::vector<double>& deltas,
    const Eigen::VectorXd& u_lo, const Eigen::VectorXd& u_hi, int levels,
    double window, double gamma) {
  const auto grid = action_grid(u_lo, u_hi, levels);
  // Convexity in the action sequence puts the stack maximum on the corners.
  const auto corners = action_grid(u_lo, u_hi, 2);

  std::vector<CollapseRow> out;
  for (double delta : deltas) {
    CollapseRow row;
    row.delta = delta;

    const Eigen::MatrixXd M = exact_q_form(lqr, delta, gamma);
    double qmin = std::numeric_limits<double>::infinity();
    double qmax = -qmin;
    Eigen::VectorXd z(lqr.state_dim() + lqr.action_dim());
    for (const Action& u : grid) {
      z << x, u;
      const double q = z.dot(M * z);
      qmin = std::min(qmin, q);
      qmax = std::max(qmax, q);
    }
    row.spread_q = qmax - qmin;

    const int N = static_cast<int>(std::ceil(window / delta));
    const int steps = std::max(1, N - 1);
    const auto pmin = make_problem(lqr, delta, gamma, steps, grid, false);
    auto pmax = pmin;
    pmax.actions = corners;
    row.spread_stack =
        detail::grid_stack_max(pmax, x) - detail::grid_stack_min(pmin, x);
    out.push_back(row);
  }
  return out;
}

TheoremReport decomposition_check(const LqrEnv& lqr, const State& x_k,
                                  const ActionStack& stack, double delta,
                                  int N, double tol, double gamma) {
  if (stack.horizon() != N) {
    throw ContractViolation("decomposition_check: stack length must be N-1");
  }
  const Eigen::VectorXd w = exact_q_weights(lqr, delta, gamma);
  const Eigen::VectorXd v = exact_v_weights(lqr);
  const Dynamics dyn = lqr_dynamics(lqr);
  const StageCost cost = lqr_stage_cost(lqr);
  const int substeps = std::max(256, static_cast<int>(delta / 1e-5));

  // True sampled trajectory under the stack, fine quadrature per interval.
  double q_stack = 0.0, integral = 0.0, jsum = 0.0;
  State x = x_k;
  for (const Action& u : stack.actions) {
    q_stack += q_hat(w, x, u);
    const StageSegment seg =
        stage_segment(dyn, cost, x, u, 0.0, delta, gamma, substeps);
    integral += seg.cost;  // interval-relative, matching the Q-form convention
    x = seg.end_state;
    jsum += j_hat(v, x);
  }

  TheoremReport rep;
  rep.theorem = "decomposition";
  rep.lhs = q_stack;
  rep.rhs = integral + std::exp(-gamma * delta) * jsum;
  rep.gap = std::abs(rep.lhs - rep.rhs);
  rep.tol = tol;
  rep.verdict = rep.gap <= tol ? TheoremReport::Verdict::Holds
                               : TheoremReport::Verdict::Violated;
  return rep;
}

std::vector<TheoremReport> run_all_checks() {
  std::vector<TheoremReport> reports;

  {
    TheoremReport rep = check_theorem1(chain_fixture(), 0, 3, 0.0);
    rep.instance = "chain-fixture-N3";
    reports.push_back(rep);
    rep = check_theorem3(chain_fixture(), 0, 3, 0.0);
    rep.instance = "chain-fixture-N3";
    reports.push_back(rep);
  }
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const Mdp mdp = random_mdp(seed);
    TheoremReport rep = check_theorem1(mdp, 4, 4, 0.0);
    rep.instance = "random-seed-" + std::to_string(seed);
    reports.push_back(rep);
    rep = check_theorem3(mdp, 4, 4, 0.0);
    rep.instance = "random-seed-" + std::to_string(seed);
    reports.push_back(rep);
  }

  const LqrEnv lqr = double_integrator();
  const State x0 = (Eigen::VectorXd(2) << 1.0, 0.0).finished();
  const Eigen::VectorXd u_lo = Eigen::VectorXd::Constant(1, -1.0);
  const Eigen::VectorXd u_hi = Eigen::VectorXd::Constant(1, 1.0);

  {
    const auto sweep =
        delta_sweep_gap(lqr, x0, 1.0, {0.2, 0.1, 0.05, 0.025, 0.0125}, u_lo, u_hi);
    for (const auto& pt : sweep) {
      TheoremReport rep;
      rep.theorem = "theorem2-bound";
      rep.instance = "lqr-delta-" + std::to_string(pt.delta);
      rep.lhs = std::abs(pt.gap);
      rep.rhs = pt.bound;
      rep.gap = std::abs(rep.lhs - rep.rhs);
      rep.tol = 0.0;
      rep.verdict = rep.lhs <= rep.rhs ? TheoremReport::Verdict::Holds
                                       : TheoremReport::Verdict::Violated;
      reports.push_back(rep);
    }
    TheoremReport decay;
    decay.theorem = "theorem2-decay";
    decay.instance = "lqr-lookahead-1s";
    decay.lhs = std::abs(sweep.back().gap);
    decay.rhs = 0.5 * std::abs(sweep.front().gap);
    decay.gap = std::abs(decay.lhs - decay.rhs);
    decay.tol = 1e-6;
    decay.verdict = decay.lhs <= decay.rhs + decay.tol
                        ? TheoremReport::Verdict::Holds
                        : TheoremReport::Verdict::Violated;
    reports.push_back(decay);
  }

  {
    const auto rows =
        q_collapse_diagnostic(lqr, x0, {0.1, 0.05, 0.01}, u_lo, u_hi);
    TheoremReport spread;
    spread.theorem = "q-collapse-spread";
    spread.instance = "lqr-x(1,0)";
    spread.lhs = rows.back().spread_q;         // delta = 0.01
    spread.rhs = 0.2 * rows.front().spread_q;  // delta = 0.1
    spread.gap = std::abs(spread.lhs - spread.rhs);
    spread.verdict = spread.lhs <= spread.rhs ? TheoremReport::Verdict::Holds
                                              : TheoremReport::Verdict::Violated;
    reports.push_back(spread);

    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    for (const auto& r : rows) {
      smin = std::min(smin, r.spread_stack);
      smax = std::max(smax, r.spread_stack);
    }
    TheoremReport stable;
    stable.theorem = "q-collapse-stack-stability";
    stable.instance = "lqr-x(1,0)";
    stable.lhs = smax;
    stable.rhs = 2.0 * smin;
    stable.gap = std::abs(stable.lhs - stable.rhs);
    stable.verdict = stable.lhs <= stable.rhs ? TheoremReport::Verdict::Holds
                                              : TheoremReport::Verdict::Violated;
    reports.push_back(stable);
  }

  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int i = 0; i < 5; ++i) {
      ActionStack stack;
      for (int s = 0; s < 5; ++s) {
        stack.actions.push_back(Eigen::VectorXd::Constant(1, unif(rng)));
      }
      TheoremReport rep = decomposition_check(
          lqr, (Eigen::VectorXd(2) << 1.0, 0.0).finished(), stack, 0.05, 6, 1e-6);
      rep.instance = "lqr-random-stack-" + std::to_string(i);
      reports.push_back(rep);
    }
  }
  return reports;
}

}  // namespace qstack
