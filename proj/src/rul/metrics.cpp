#include "kprog/rul/metrics.hpp"

#include <cmath>

#include "kprog/rul/regression.hpp"

namespace kprog::rul {

MetricReport compute_metrics(std::span<const double> predictions, std::span<const double> targets,
                             double mape_floor) {
  if (predictions.empty()) throw RulError("metrics: empty evaluation set");
  if (predictions.size() != targets.size()) throw RulError("metrics: prediction and target counts differ");
  MetricReport r;
  r.n = predictions.size();
  std::size_t mape_n = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double e = predictions[i] - targets[i];
    r.mse += e * e;
    r.mae += std::abs(e);
    if (std::abs(targets[i]) > mape_floor) {
      r.mape += std::abs(e) / std::abs(targets[i]);
      ++mape_n;
    } else {
      ++r.excluded_mape;
    }
  }
  r.mse /= static_cast<double>(r.n);
  r.mae /= static_cast<double>(r.n);
  r.mape = mape_n > 0 ? r.mape / static_cast<double>(mape_n) : 0.0;
  return r;
}

namespace {

// Half-sample symmetric reflection: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2} ...
std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

}  // namespace

std::vector<double> gaussian_smooth(std::span<const double> series, double sigma) {
  if (!(sigma >= 0.0)) throw RulError("gaussian_smooth: sigma must be >= 0");
  std::vector<double> out(series.begin(), series.end());
  const auto radius = static_cast<std::ptrdiff_t>(std::lround(4.0 * sigma));
  if (sigma == 0.0 || radius == 0 || series.empty()) return out;

  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  const auto n = static_cast<std::ptrdiff_t>(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k)
      acc += kernel[static_cast<std::size_t>(k + radius)] * series[reflect(i + k, n)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"mse", r.mse}, {"mae", r.mae}, {"mape", r.mape}, {"n", r.n},
          {"excluded_mape", r.excluded_mape}, {"smoothing_sigma", r.smoothing_sigma}};
}

MetricReport metric_report_from_json(const nlohmann::json& doc) {
  MetricReport r;
  r.mse = doc.at("mse").get<double>();
  r.mae = doc.at("mae").get<double>();
  r.mape = doc.at("mape").get<double>();
  r.n = doc.at("n").get<std::size_t>();
  r.excluded_mape = doc.value("excluded_mape", std::size_t{0});
  r.smoothing_sigma = doc.value("smoothing_sigma", 0.0);
  return r;
}

}  // namespace kprog::rul
