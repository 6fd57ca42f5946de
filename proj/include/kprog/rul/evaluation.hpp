#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "kprog/data/windows.hpp"
#include "kprog/models/bundle.hpp"
#include "kprog/rul/metrics.hpp"
#include "kprog/rul/regression.hpp"

namespace kprog::rul {

// One test trajectory's prediction curve, ordered by window end time.
struct PredictionCurve {
  std::size_t trajectory = 0;
  std::vector<double> time;
  std::vector<double> rul_true;
  std::vector<double> rul_pred;
  std::vector<double> rul_pred_smoothed;
};

struct Evaluation {
  MetricReport report;
  std::vector<PredictionCurve> curves;
};

// Clamps predictions to [0, 1], scores every row and groups the rows into
// per-trajectory curves smoothed with sigma. Metrics use the raw (clamped)
// predictions.
Evaluation evaluate_predictions(const data::WindowTable& table, std::span<const double> predictions,
                                double smoothing_sigma = 5.0);

// Observables of the supervision windows regressed on their RUL labels.
RulEstimator fit_estimator(const models::ModelBundle& bundle, const data::WindowTable& supervision,
                           double ridge = kDefaultRidge);

// Unclamped RUL predictions: the estimator on the observables, or the
// network output for fnn bundles (estimator ignored).
std::vector<double> predict_rul(const models::ModelBundle& bundle, const RulEstimator* estimator,
                                const data::WindowTable& table);

Evaluation evaluate(const models::ModelBundle& bundle, const RulEstimator* estimator,
                    const data::WindowTable& test, double smoothing_sigma = 5.0);

// Rows with end_time <= fraction * eol_time of their trajectory.
data::WindowTable early_windows(const data::WindowTable& table, double fraction);
// Rows with end_time > fraction * eol_time; all rows when fraction >= 1.
data::WindowTable late_windows(const data::WindowTable& table, double fraction);

// Fits on the early windows of the supervision trajectories and scores the
// late windows of the test trajectories. fraction = 1 is the standard
// protocol. An fnn bundle is scored as trained (no refit).
Evaluation early_lifetime_protocol(const models::ModelBundle& bundle, const data::WindowTable& supervision,
                                   const data::WindowTable& test, double fraction = 0.3,
                                   double ridge = kDefaultRidge, double smoothing_sigma = 5.0);

// time_s,rul_true,rul_pred,rul_pred_smoothed
void write_curve_csv(std::ostream& out, const PredictionCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const PredictionCurve& curve);

}  // namespace kprog::rul
