#include "qstack/critics.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace qstack {

namespace {

// zz' flattened diagonal-major: k = 0 .. dim-1, entry (i, i+k) at row i.
Eigen::VectorXd outer_diagonals(const Eigen::VectorXd& z) {
  const long n = z.size();
  Eigen::VectorXd out(n * (n + 1) / 2);
  long idx = 0;
  for (long k = 0; k < n; ++k) {
    for (long i = 0; i + k < n; ++i) {
      out[idx++] = z[i] * z[i + k];
    }
  }
  return out;
}

Eigen::VectorXd stacked(const State& x, const Action& u) {
  Eigen::VectorXd z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace

int phi_q_dim(int n, int m) { return (n + m) * (n + m + 1) / 2; }
int phi_v_dim(int n) { return n * (n + 1) / 2; }

Eigen::VectorXd phi_q(const State& x, const Action& u) {
  return outer_diagonals(stacked(x, u));
}

Eigen::VectorXd phi_v(const State& x) { return outer_diagonals(x); }

Eigen::VectorXd quadratic_weights(const Eigen::MatrixXd& S) {
  const long n = S.rows();
  if (S.cols() != n) throw ContractViolation("quadratic_weights: S must be square");
  Eigen::VectorXd w(n * (n + 1) / 2);
  long idx = 0;
  for (long k = 0; k < n; ++k) {
    for (long i = 0; i + k < n; ++i) {
      w[idx++] = (k == 0) ? S(i, i) : S(i, i + k) + S(i + k, i);
    }
  }
  return w;
}

Eigen::MatrixXd quadratic_matrix(const Eigen::VectorXd& w, int dim) {
  if (w.size() != dim * (dim + 1) / 2) {
    throw ContractViolation("quadratic_matrix: weight dimension mismatch");
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim, dim);
  long idx = 0;
  for (long k = 0; k < dim; ++k) {
    for (long i = 0; i + k < dim; ++i) {
      if (k == 0) {
        S(i, i) = w[idx];
      } else {
        S(i, i + k) = 0.5 * w[idx];
        S(i + k, i) = 0.5 * w[idx];
      }
      ++idx;
    }
  }
  return S;
}

double q_hat(const Eigen::VectorXd& w, const State& x, const Action& u) {
  if (w.size() != phi_q_dim(static_cast<int>(x.size()), static_cast<int>(u.size()))) {
    throw ContractViolation("q_hat: weight dimension mismatch");
  }
  return w.dot(phi_q(x, u));
}

double j_hat(const Eigen::VectorXd& v, const State& x) {
  if (v.size() != phi_v_dim(static_cast<int>(x.size()))) {
    throw ContractViolation("j_hat: weight dimension mismatch");
  }
  return v.dot(phi_v(x));
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 2) throw ContractViolation("ReplayBuffer: capacity must be >= 2");
}

void ReplayBuffer::push(Transition t) {
  items_.push_back(std::move(t));
  if (static_cast<int>(items_.size()) > capacity_) items_.pop_front();
}

double td_residual_q(const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                     const Transition& tr, double gamma, double delta) {
  const double boot = std::exp(-gamma * delta);
  return w.dot(phi_q(tr.x, tr.u)) -
         boot * w_prev.dot(phi_q(tr.x_next, tr.u_next)) - tr.stage;
}

double td_residual_v(const Eigen::VectorXd& v, const Eigen::VectorXd& v_prev,
                     const Transition& tr, double gamma, double delta) {
  const double boot = std::exp(-gamma * delta);
  return v.dot(phi_v(tr.x)) - boot * v_prev.dot(phi_v(tr.x_next)) - tr.stage;
}

namespace {

// Ridge-regularized least squares  min 0.5*sum (phi_j . w - b_j)^2
// + 0.5*ridge*|w|^2, solved through the normal equations.
Eigen::VectorXd solve_block(const std::vector<Eigen::VectorXd>& phis,
                            const std::vector<double>& targets, double ridge,
                            const char* what) {
  const long d = phis.front().size();
  Eigen::MatrixXd gram = ridge * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (size_t j = 0; j < phis.size(); ++j) {
    if (!std::isfinite(targets[j])) {
      throw UpdateFailed(std::string(what) + ": non-finite TD target");
    }
    gram.noalias() += phis[j] * phis[j].transpose();
    rhs.noalias() += targets[j] * phis[j];
  }
  Eigen::VectorXd sol = gram.ldlt().solve(rhs);
  if (!sol.allFinite()) {
    throw UpdateFailed(std::string(what) + ": solve produced non-finite weights");
  }
  return sol;
}

}  // namespace

CriticWeights critic_update(const ReplayBuffer& buffer,
                            const Eigen::VectorXd& w_prev,
                            const Eigen::VectorXd& v_prev, double gamma,
                            double delta, double ridge) {
  if (buffer.size() < 2) {
    throw ContractViolation("critic_update: need at least 2 transitions");
  }
  ridge = std::max(ridge, 1e-8);
  const double boot = std::exp(-gamma * delta);

  std::vector<Eigen::VectorXd> phi_qs, phi_vs;
  std::vector<double> target_q, target_v;
  phi_qs.reserve(buffer.size());
  phi_vs.reserve(buffer.size());
  for (const Transition& tr : buffer.items()) {
    phi_qs.push_back(phi_q(tr.x, tr.u));
    target_q.push_back(boot * w_prev.dot(phi_q(tr.x_next, tr.u_next)) + tr.stage);
    phi_vs.push_back(phi_v(tr.x));
    target_v.push_back(boot * v_prev.dot(phi_v(tr.x_next)) + tr.stage);
  }

  CriticWeights out;
  out.w = solve_block(phi_qs, target_q, ridge, "critic_update[w]");
  out.v = solve_block(phi_vs, target_v, ridge, "critic_update[v]");
  return out;
}

double critic_objective(const ReplayBuffer& buffer, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w_prev,
                        const Eigen::VectorXd& v_prev, double gamma,
                        double delta) {
  double obj = 0.0;
  for (const Transition& tr : buffer.items()) {
    const double eq = td_residual_q(w, w_prev, tr, gamma, delta);
    const double ev = td_residual_v(v, v_prev, tr, gamma, delta);
    obj += 0.5 * eq * eq + 0.5 * ev * ev;
  }
  return obj;
}

void save_weights(const std::string& path, const CriticWeights& cw) {
  nlohmann::json doc;
  doc["feature_order"] = "outer-product-diagonals, main diagonal first, off-diagonals once (doubled weights for symmetric forms)";
  doc["step"] = cw.step;
  doc["w"] = std::vector<double>(cw.w.data(), cw.w.data() + cw.w.size());
  doc["v"] = std::vector<double>(cw.v.data(), cw.v.data() + cw.v.size());
  std::ofstream out(path);
  if (!out) throw IoError("save_weights: cannot write " + path);
  out << doc.dump(2) << "\n";
}

CriticWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_weights: cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_weights: " + std::string(e.what()));
  }
  CriticWeights cw;
  const auto wv = doc.at("w").get<std::vector<double>>();
  const auto vv = doc.at("v").get<std::vector<double>>();
  cw.w = Eigen::Map<const Eigen::VectorXd>(wv.data(), wv.size());
  cw.v = Eigen::Map<const Eigen::VectorXd>(vv.data(), vv.size());
  cw.step = doc.value("step", 0L);
  return cw;
}

}  // namespace qstack
