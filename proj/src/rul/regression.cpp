#include "kprog/rul/regression.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace kprog::rul {

double RulEstimator::predict(std::span<const double> y) const {
  if (y.size() != coefficients.size())
    throw RulError("estimator expects " + std::to_string(coefficients.size()) + " observables, got " +
                   std::to_string(y.size()));
  double out = intercept;
  for (std::size_t i = 0; i < y.size(); ++i) out += coefficients[i] * y[i];
  return out;
}

std::vector<double> RulEstimator::predict(const nn::Matrix& observables) const {
  std::vector<double> out(observables.rows());
  for (std::size_t r = 0; r < observables.rows(); ++r) out[r] = predict(observables.row(r));
  return out;
}

RulEstimator ols_fit(const nn::Matrix& observables, std::span<const double> targets, double ridge) {
  const std::size_t n = observables.rows();
  const std::size_t d = observables.cols();
  if (targets.size() != n) throw RulError("ols_fit: observable and target counts differ");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw RulError("ols_fit: ridge must be a finite value >= 0");
  if (n < d + 1)
    throw RulError("ols_fit: need at least " + std::to_string(d + 1) + " samples for " + std::to_string(d) +
                   " observables, got " + std::to_string(n));
  if (!observables.all_finite()) throw RulError("ols_fit: non-finite observables");

  // Augmented least squares [Y 1; sqrt(ridge) I 0] [c; b] = [t; 0].
  const std::size_t extra = ridge > 0.0 ? d : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + extra), static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + extra));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) a(r, c) = observables(r, c);
    a(r, d) = 1.0;
    rhs(r) = targets[r];
  }
  const double root = std::sqrt(ridge);
  for (std::size_t c = 0; c < extra; ++c) a(n + c, c) = root;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (ridge == 0.0 && qr.rank() < static_cast<Eigen::Index>(d + 1))
    throw RulError("ols_fit: rank-deficient design (rank " + std::to_string(qr.rank()) + " < " +
                   std::to_string(d + 1) + "); use a nonzero ridge");
  const Eigen::VectorXd sol = qr.solve(rhs);

  RulEstimator e;
  e.ridge = ridge;
  e.coefficients.assign(sol.data(), sol.data() + d);
  e.intercept = sol(static_cast<Eigen::Index>(d));
  for (double c : e.coefficients)
    if (!std::isfinite(c)) throw RulError("ols_fit: non-finite coefficients");
  return e;
}

nlohmann::json to_json(const RulEstimator& e) {
  return {{"coefficients", e.coefficients}, {"intercept", e.intercept}, {"ridge", e.ridge}};
}

RulEstimator rul_estimator_from_json(const nlohmann::json& doc) {
  RulEstimator e;
  e.coefficients = doc.at("coefficients").get<std::vector<double>>();
  e.intercept = doc.at("intercept").get<double>();
  e.ridge = doc.value("ridge", 0.0);
  return e;
}

}  // namespace kprog::rul
