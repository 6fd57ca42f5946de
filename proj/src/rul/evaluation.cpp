#include "kprog/rul/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace kprog::rul {

Evaluation evaluate_predictions(const data::WindowTable& table, std::span<const double> predictions,
                                double smoothing_sigma) {
  if (table.size() == 0) throw RulError("evaluate: empty test set");
  if (predictions.size() != table.size()) throw RulError("evaluate: one prediction per window required");

  std::vector<double> clamped(predictions.begin(), predictions.end());
  for (double& p : clamped) p = std::clamp(p, 0.0, 1.0);

  Evaluation ev;
  ev.report = compute_metrics(clamped, table.rul);
  ev.report.smoothing_sigma = smoothing_sigma;

  std::map<std::size_t, std::vector<std::size_t>> by_trajectory;
  for (std::size_t i = 0; i < table.size(); ++i) by_trajectory[table.trajectory[i]].push_back(i);
  for (auto& [traj, rows] : by_trajectory) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return table.end_time[a] < table.end_time[b]; });
    PredictionCurve c;
    c.trajectory = traj;
    for (std::size_t r : rows) {
      c.time.push_back(table.end_time[r]);
      c.rul_true.push_back(table.rul[r]);
      c.rul_pred.push_back(clamped[r]);
    }
    c.rul_pred_smoothed = gaussian_smooth(c.rul_pred, smoothing_sigma);
    ev.curves.push_back(std::move(c));
  }
  return ev;
}

RulEstimator fit_estimator(const models::ModelBundle& bundle, const data::WindowTable& supervision, double ridge) {
  if (supervision.size() == 0) throw RulError("fit_estimator: no supervision windows");
  return ols_fit(bundle.encode(supervision), supervision.rul, ridge);
}

std::vector<double> predict_rul(const models::ModelBundle& bundle, const RulEstimator* estimator,
                                const data::WindowTable& table) {
  if (bundle.kind == models::ModelKind::fnn) return bundle.predict(table);
  if (!estimator) throw RulError("predict_rul: " + models::to_string(bundle.kind) + " needs a fitted estimator");
  return estimator->predict(bundle.encode(table));
}

Evaluation evaluate(const models::ModelBundle& bundle, const RulEstimator* estimator, const data::WindowTable& test,
                    double smoothing_sigma) {
  if (test.size() == 0) throw RulError("evaluate: empty test set");
  return evaluate_predictions(test, predict_rul(bundle, estimator, test), smoothing_sigma);
}

data::WindowTable early_windows(const data::WindowTable& table, double fraction) {
  return table.filter([&](std::size_t i) { return table.end_time[i] <= fraction * table.eol_time[i]; });
}

data::WindowTable late_windows(const data::WindowTable& table, double fraction) {
  if (fraction >= 1.0) return table;
  return table.filter([&](std::size_t i) { return table.end_time[i] > fraction * table.eol_time[i]; });
}

Evaluation early_lifetime_protocol(const models::ModelBundle& bundle, const data::WindowTable& supervision,
                                   const data::WindowTable& test, double fraction, double ridge,
                                   double smoothing_sigma) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw RulError("early_lifetime: fraction must be in (0, 1]");
  const data::WindowTable late = late_windows(test, fraction);
  if (late.size() == 0) throw RulError("early_lifetime: no test windows after the early fraction");
  if (bundle.kind == models::ModelKind::fnn) return evaluate(bundle, nullptr, late, smoothing_sigma);

  const data::WindowTable early = early_windows(supervision, fraction);
  const std::size_t need = bundle.observable_dim() + 1;
  if (early.size() < need)
    throw RulError("early_lifetime: " + std::to_string(early.size()) + " early windows, need at least " +
                   std::to_string(need));
  const RulEstimator est = fit_estimator(bundle, early, ridge);
  return evaluate(bundle, &est, late, smoothing_sigma);
}

void write_curve_csv(std::ostream& out, const PredictionCurve& c) {
  out << "time_s,rul_true,rul_pred,rul_pred_smoothed\n";
  char buf[128];
  for (std::size_t i = 0; i < c.time.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c.time[i], c.rul_true[i], c.rul_pred[i],
                  c.rul_pred_smoothed[i]);
    out << buf;
  }
}

void write_curve_csv(const std::filesystem::path& path, const PredictionCurve& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_curve_csv(out, c);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace kprog::rul
