#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace kprog::nn {

class NonFiniteGradientError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Adam with bias correction. Weight decay is the coupled (L2) form: the
// decay term weight_decay * w is added to the raw gradient before the
// moment updates.
struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  double learning_rate = 1e-4;
  double weight_decay = 1e-7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments are allocated on the first call and must keep the same shapes
// afterwards. Nothing is modified if any check fails.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

}  // namespace kprog::nn
