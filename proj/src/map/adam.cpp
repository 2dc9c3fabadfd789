#include "gsfield/map/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gsf {

AdamState::AdamState(double lr, int stride) : learning_rate(lr), stride_(stride) {
  if (stride <= 0) throw std::invalid_argument("optimizer stride must be positive");
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
}

void AdamState::append(size_t entries) {
  m_.resize(m_.size() + entries * stride_, 0.0);
  v_.resize(v_.size() + entries * stride_, 0.0);
}

void AdamState::filter(const std::vector<uint8_t>& keep) {
  if (keep.size() != entries())
    throw std::invalid_argument("optimizer filter mask length mismatch");
  size_t out = 0;
  for (size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    for (int a = 0; a < stride_; ++a) {
      m_[out * stride_ + a] = m_[i * stride_ + a];
      v_[out * stride_ + a] = v_[i * stride_ + a];
    }
    ++out;
  }
  m_.resize(out * stride_);
  v_.resize(out * stride_);
}

void AdamState::clear() {
  m_.clear();
  v_.clear();
  t_ = 0;
}

void AdamState::step(double* params, const double* grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  const size_t n = m_.size();
  for (size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * g;
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

}  // namespace gsf
