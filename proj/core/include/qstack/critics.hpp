#pragma once

#include <Eigen/Dense>
#include <deque>
#include <string>

#include "qstack/dynamics.hpp"

namespace qstack {

// Quadratic features: the symmetric outer product zz' flattened diagonal by
// diagonal, main diagonal first, then each upper diagonal with ascending row
// index. Every off-diagonal product appears once, so a symmetric form x'Sx
// is represented with the off-diagonal weights doubled (see
// quadratic_weights). Stored weight files record this convention.

int phi_q_dim(int n, int m);  // (n+m)(n+m+1)/2
int phi_v_dim(int n);         // n(n+1)/2

Eigen::VectorXd phi_q(const State& x, const Action& u);
Eigen::VectorXd phi_v(const State& x);

/// Weight vector w with <w, phi_v(x)> = x'Sx for symmetric S
/// (diagonal entries once, off-diagonal entries doubled).
Eigen::VectorXd quadratic_weights(const Eigen::MatrixXd& S);

/// Inverse of quadratic_weights.
Eigen::MatrixXd quadratic_matrix(const Eigen::VectorXd& w, int dim);

/// Q-critic value <w, phi_q(x, u)>.
double q_hat(const Eigen::VectorXd& w, const State& x, const Action& u);

/// Cost-to-go critic value <v, phi_v(x)>.
double j_hat(const Eigen::VectorXd& v, const State& x);

/// One experienced interval: (x, u) at the sample instant, the realized
/// successor pair, and the realized stage integral over the interval.
struct Transition {
  State x;
  Action u;
  State x_next;
  Action u_next;
  double stage = 0.0;
};

/// Sliding window of the most recent transitions, strict FIFO. Critic
/// updates are meant to start only once the window is full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(Transition t);
  bool full() const { return static_cast<int>(items_.size()) == capacity_; }
  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<Transition>& items() const { return items_; }
  void clear() { items_.clear(); }

 private:
  int capacity_;
  std::deque<Transition> items_;
};

struct CriticWeights {
  Eigen::VectorXd w;  // Q-critic, dim (n+m)(n+m+1)/2
  Eigen::VectorXd v;  // cost-to-go critic, dim n(n+1)/2
  long step = 0;
};

/// TD residual of the Q-critic against the frozen previous weights:
///   w . phi_q(x_j, u_j) - exp(-gamma*delta) w_prev . phi_q(x_j+1, u_j+1)
///   - stage_j.
double td_residual_q(const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                     const Transition& tr, double gamma, double delta);

/// State-only analogue bootstrapping from the realized successor state.
double td_residual_v(const Eigen::VectorXd& v, const Eigen::VectorXd& v_prev,
                     const Transition& tr, double gamma, double delta);

/// Least-squares minimizer of the summed squared TD residuals with the
/// previous weights frozen. The Q- and V-blocks decouple; each is solved in
/// closed form through ridge-regularized normal equations (ridge >= 1e-8 is
/// always applied, so rank-deficient feature Grams cannot fault).
CriticWeights critic_update(const ReplayBuffer& buffer,
                            const Eigen::VectorXd& w_prev,
                            const Eigen::VectorXd& v_prev, double gamma,
                            double delta, double ridge = 1e-8);

/// Critic objective 0.5*sum e_q^2 + 0.5*sum e_v^2 for candidate weights.
double critic_objective(const ReplayBuffer& buffer, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w_prev,
                        const Eigen::VectorXd& v_prev, double gamma,
                        double delta);

void save_weights(const std::string& path, const CriticWeights& cw);
CriticWeights load_weights(const std::string& path);

}  // namespace qstack
