#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vascan/nn/tensor.hpp"

namespace vascan::nn {

// Step-decay schedule: the base rate halves every halve_every completed
// updates.
inline double lr_schedule(double base_lr, int halve_every,
                          std::int64_t completed_iterations) {
  return base_lr * std::pow(0.5, static_cast<double>(
                                     completed_iterations / halve_every));
}

// Adam with per-span first/second-moment state kept in double regardless
// of the model scalar.
template <typename S>
class Adam {
 public:
  double base_lr = 1e-4;
  int halve_every = 250;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  std::int64_t iterations() const { return t_; }
  double current_lr() const { return lr_schedule(base_lr, halve_every, t_); }

  void step(ParamList<S>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(Eigen::VectorXd::Zero(p.count));
        v_.emplace_back(Eigen::VectorXd::Zero(p.count));
      }
    }
    if (m_.size() != params.size()) {
      throw std::invalid_argument("optimizer state does not match params");
    }
    const double lr = current_lr();
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      ParamSpan<S>& p = params[i];
      Eigen::VectorXd& m = m_[i];
      Eigen::VectorXd& v = v_[i];
      for (std::int64_t j = 0; j < p.count; ++j) {
        const double g = static_cast<double>(p.grad[j]);
        m(j) = beta1 * m(j) + (1.0 - beta1) * g;
        v(j) = beta2 * v(j) + (1.0 - beta2) * g * g;
        const double update =
            lr * (m(j) / bc1) / (std::sqrt(v(j) / bc2) + eps);
        p.value[j] = static_cast<S>(static_cast<double>(p.value[j]) - update);
      }
    }
  }

 private:
  std::int64_t t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

}  // namespace vascan::nn
