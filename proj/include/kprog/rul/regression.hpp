#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "kprog/nn/matrix.hpp"

namespace kprog::rul {

class RulError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultRidge = 1e-8;

// rul ~ coefficients . y + intercept
struct RulEstimator {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double ridge = 0.0;

  std::size_t dim() const { return coefficients.size(); }
  double predict(std::span<const double> y) const;
  std::vector<double> predict(const nn::Matrix& observables) const;

  friend bool operator==(const RulEstimator&, const RulEstimator&) = default;
};

// Minimizes sum (t - c.y - b)^2 + ridge * |c|^2. The intercept is not
// penalized. Needs at least d + 1 rows; at ridge = 0 a rank-deficient design
// is an error.
RulEstimator ols_fit(const nn::Matrix& observables, std::span<const double> targets, double ridge = kDefaultRidge);

nlohmann::json to_json(const RulEstimator& e);
RulEstimator rul_estimator_from_json(const nlohmann::json& doc);

}  // namespace kprog::rul
