#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace kprog::rul {

inline constexpr double kMapeFloor = 0.01;

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  double mape = 0.0;  // a fraction, not percent
  std::size_t n = 0;
  std::size_t excluded_mape = 0;  // targets with |rul| <= floor
  double smoothing_sigma = 0.0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// Throws RulError on empty or mismatched input.
MetricReport compute_metrics(std::span<const double> predictions, std::span<const double> targets,
                             double mape_floor = kMapeFloor);

// Convolution with a Gaussian truncated at round(4 sigma) samples and
// normalized to sum 1; the series is extended by mirror reflection
// (edge sample repeated). sigma = 0 returns the input.
std::vector<double> gaussian_smooth(std::span<const double> series, double sigma);

nlohmann::json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& doc);

}  // namespace kprog::rul
