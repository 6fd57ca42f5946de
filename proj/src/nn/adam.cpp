#include "kprog/nn/adam.hpp"

#include <cmath>
#include <string>

#include "kprog/nn/matrix.hpp"

namespace kprog::nn {

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (!(state.learning_rate > 0.0)) throw std::invalid_argument("adam: learning_rate must be > 0");
  require(params.size() == grads.size(), "adam: " + std::to_string(params.size()) +
                                             " parameter groups but " +
                                             std::to_string(grads.size()) + " gradient groups");
  for (std::size_t g = 0; g < params.size(); ++g) {
    require(params[g].size() == grads[g].size(),
            "adam: group " + std::to_string(g) + " parameter/gradient size mismatch");
    for (double v : grads[g])
      if (!std::isfinite(v))
        throw NonFiniteGradientError("adam: non-finite gradient in group " + std::to_string(g));
  }

  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  } else {
    require(state.first_moment.size() == params.size(), "adam: parameter groups changed between steps");
    for (std::size_t g = 0; g < params.size(); ++g)
      require(state.first_moment[g].size() == params[g].size(),
              "adam: group " + std::to_string(g) + " changed shape between steps");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t g = 0; g < params.size(); ++g) {
    auto p = params[g];
    auto grad = grads[g];
    auto& m = state.first_moment[g];
    auto& v = state.second_moment[g];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = grad[i] + state.weight_decay * p[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace kprog::nn
