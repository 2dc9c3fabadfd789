#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gsf {

/// First-order adaptive-moment optimizer over a flat parameter array grouped
/// into fixed-stride entries (one entry per primitive or pose). Moment buffers
/// stay co-indexed with the entries across append/filter edits; fresh entries
/// start with zero moments and share the group's step count.
class AdamState {
 public:
  AdamState(double learning_rate, int stride);

  void append(size_t entries);
  /// Drops entries whose keep flag is zero, preserving the moments of the rest.
  void filter(const std::vector<uint8_t>& keep);
  void clear();

  /// One update over all entries: x -= lr * m_hat / (sqrt(v_hat) + eps).
  /// params and grads must hold entries() * stride() values.
  void step(double* params, const double* grads);

  size_t entries() const { return m_.size() / static_cast<size_t>(stride_); }
  int stride() const { return stride_; }
  uint64_t steps_taken() const { return t_; }

  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

 private:
  int stride_;
  uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace gsf
