#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "kprog/core/rng.hpp"
#include "kprog/rul/evaluation.hpp"
#include "kprog/rul/metrics.hpp"
#include "kprog/rul/regression.hpp"

using namespace kprog;
using namespace kprog::rul;
using nn::Matrix;

namespace {

Matrix random_features(Rng& rng, std::size_t n, std::size_t d) {
  Matrix y(n, d);
  for (double& v : y.values()) v = rng.normal();
  return y;
}

// Ridge normal equations (intercept unpenalized) by Gauss-Jordan elimination.
std::vector<double> normal_equations(const Matrix& y, const std::vector<double>& t, double ridge) {
  const std::size_t d = y.cols(), n = y.rows(), p = d + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> z(y.row(r).begin(), y.row(r).end());
    z.push_back(1.0);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += z[i] * z[j];
      a[i][p] += z[i] * t[r];
    }
  }
  for (std::size_t i = 0; i < d; ++i) a[i][i] += ridge;
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> out(p);
  for (std::size_t i = 0; i < p; ++i) out[i] = a[i][p] / a[i][i];
  return out;
}

// Direct convolution with explicit half-sample reflection.
std::vector<double> smooth_oracle(const std::vector<double>& s, double sigma) {
  const long n = long(s.size());
  const long radius = std::lround(4.0 * sigma);
  std::vector<double> w;
  for (long k = -radius; k <= radius; ++k) w.push_back(std::exp(-0.5 * double(k * k) / (sigma * sigma)));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  auto at = [&](long i) {
    const long period = 2 * n;
    i = ((i % period) + period) % period;
    return i < n ? s[std::size_t(i)] : s[std::size_t(period - 1 - i)];
  };
  std::vector<double> out(s.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) acc += w[std::size_t(k + radius)] * at(i + k);
    out[std::size_t(i)] = acc / total;
  }
  return out;
}

data::WindowTable table_of(std::vector<double> end_time, double eol, std::vector<std::size_t> traj) {
  data::WindowTable t;
  const std::size_t n = end_time.size();
  t.x = Matrix(n, 1);
  t.u = Matrix(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    t.x(i, 0) = double(i);
    t.end_time.push_back(end_time[i]);
    t.eol_time.push_back(eol);
    t.rul.push_back((eol - end_time[i]) / eol);
    t.start.push_back(i);
  }
  t.trajectory = std::move(traj);
  return t;
}

}  // namespace

TEST_CASE("ols recovers an exact linear map") {
  Rng rng(1);
  const Matrix y = random_features(rng, 40, 4);
  const std::vector<double> c{0.5, -1.25, 2.0, 0.125};
  std::vector<double> t;
  for (std::size_t r = 0; r < 40; ++r) {
    double v = 0.7;
    for (std::size_t k = 0; k < 4; ++k) v += c[k] * y(r, k);
    t.push_back(v);
  }
  const RulEstimator e = ols_fit(y, t, 0.0);
  for (std::size_t k = 0; k < 4; ++k) CHECK(e.coefficients[k] == doctest::Approx(c[k]).epsilon(1e-10));
  CHECK(e.intercept == doctest::Approx(0.7).epsilon(1e-10));
  const auto pred = e.predict(y);
  for (std::size_t r = 0; r < 40; ++r) CHECK(std::abs(pred[r] - t[r]) < 1e-10);
}

TEST_CASE("ols agrees with the normal equations and residuals are orthogonal") {
  Rng rng(2);
  for (double ridge : {0.0, 1e-8, 0.5, 10.0}) {
    const Matrix y = random_features(rng, 30, 5);
    std::vector<double> t(30);
    for (double& v : t) v = rng.uniform();
    const RulEstimator e = ols_fit(y, t, ridge);
    const auto ref = normal_equations(y, t, ridge);
    for (std::size_t k = 0; k < 5; ++k) CHECK(e.coefficients[k] == doctest::Approx(ref[k]).epsilon(1e-8));
    CHECK(e.intercept == doctest::Approx(ref[5]).epsilon(1e-8));
    if (ridge == 0.0) {
      const auto pred = e.predict(y);
      for (std::size_t k = 0; k <= 5; ++k) {
        double dot = 0.0;
        for (std::size_t r = 0; r < 30; ++r) dot += (t[r] - pred[r]) * (k < 5 ? y(r, k) : 1.0);
        CHECK(std::abs(dot) < 1e-8);
      }
    }
  }
}

TEST_CASE("ols edge cases") {
  Rng rng(3);
  const Matrix y = random_features(rng, 10, 3);
  const std::vector<double> flat(10, 0.42);
  const RulEstimator e = ols_fit(y, flat, 0.0);
  for (double c : e.coefficients) CHECK(std::abs(c) < 1e-12);
  CHECK(e.intercept == doctest::Approx(0.42));

  // heavy ridge shrinks the slopes and leaves the mean
  std::vector<double> t(10);
  for (double& v : t) v = rng.uniform();
  const RulEstimator big = ols_fit(y, t, 1e12);
  for (double c : big.coefficients) CHECK(std::abs(c) < 1e-9);
  CHECK(big.intercept == doctest::Approx(std::accumulate(t.begin(), t.end(), 0.0) / 10.0).epsilon(1e-6));

  Matrix dup(10, 2);
  for (std::size_t r = 0; r < 10; ++r) dup(r, 0) = dup(r, 1) = y(r, 0);
  CHECK_THROWS_AS(ols_fit(dup, t, 0.0), RulError);
  CHECK_NOTHROW(ols_fit(dup, t, 1e-8));
  CHECK_THROWS_AS(ols_fit(random_features(rng, 3, 3), std::vector<double>(3, 0.0), 0.0), RulError);
  CHECK_THROWS_AS(ols_fit(y, std::vector<double>(9, 0.0), 0.0), RulError);
  std::vector<double> bad = t;
  bad[2] = NAN;
  CHECK_THROWS_AS(ols_fit(y, bad, 0.0), RulError);

  const RulEstimator back = rul_estimator_from_json(nlohmann::json::parse(to_json(e).dump()));
  CHECK(back == e);
}

TEST_CASE("metric examples") {
  const std::vector<double> t{1.0, 0.75, 0.5, 0.25};
  std::vector<double> p;
  for (double v : t) p.push_back(v + 0.1);
  const MetricReport r = compute_metrics(p, t);
  CHECK(r.mse == doctest::Approx(0.01));
  CHECK(r.mae == doctest::Approx(0.1));
  CHECK(r.mse == doctest::Approx(r.mae * r.mae));
  CHECK(r.mape == doctest::Approx((0.1 + 0.1 / 0.75 + 0.2 + 0.4) / 4.0));
  CHECK(r.n == 4);
  CHECK(r.excluded_mape == 0);

  const MetricReport z = compute_metrics(std::vector<double>{0.2, 0.5}, std::vector<double>{0.0, 0.5});
  CHECK(z.excluded_mape == 1);
  CHECK(z.mape == 0.0);
  CHECK(z.mse == doctest::Approx(0.02));

  const MetricReport perfect = compute_metrics(t, t);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.mae == 0.0);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}), RulError);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{1.0}, t), RulError);
  CHECK(metric_report_from_json(to_json(r)) == r);
}

TEST_CASE("metrics are ordered and mse dominates mae squared") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(20), t(20);
    for (std::size_t i = 0; i < 20; ++i) {
      t[i] = rng.uniform();
      p[i] = t[i] + 0.2 * rng.normal();
    }
    const MetricReport r = compute_metrics(p, t);
    CHECK(r.mse >= 0.0);
    CHECK(r.mse >= r.mae * r.mae - 1e-15);
  }
}

TEST_CASE("gaussian smoothing") {
  Rng rng(5);
  std::vector<double> s(60);
  for (double& v : s) v = rng.normal();
  CHECK(gaussian_smooth(s, 0.0) == s);
  for (double sigma : {0.5, 1.0, 3.0, 5.0, 20.0}) {
    const auto got = gaussian_smooth(s, sigma);
    const auto ref = smooth_oracle(s, sigma);
    REQUIRE(got.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(got[i] - ref[i]) < 1e-12);
  }
  const auto flat = gaussian_smooth(std::vector<double>(30, 2.5), 4.0);
  for (double v : flat) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));

  std::vector<double> impulse(101, 0.0);
  impulse[50] = 1.0;
  const auto spread = gaussian_smooth(impulse, 3.0);
  CHECK(std::accumulate(spread.begin(), spread.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 1; k <= 20; ++k) CHECK(spread[50 - k] == doctest::Approx(spread[50 + k]).epsilon(1e-14));
  CHECK(spread[50] > spread[51]);

  // reflection keeps the total of any series
  const auto sm = gaussian_smooth(s, 2.0);
  CHECK(std::accumulate(sm.begin(), sm.end(), 0.0) ==
        doctest::Approx(std::accumulate(s.begin(), s.end(), 0.0)).epsilon(1e-10));
  CHECK(gaussian_smooth(std::vector<double>{3.0}, 5.0)[0] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("early and late windows") {
  const data::WindowTable t = table_of({10, 20, 30, 40, 50, 60, 70, 80, 90, 100}, 100, std::vector<std::size_t>(10, 0));
  CHECK(early_windows(t, 0.3).size() == 3);
  CHECK(late_windows(t, 0.3).size() == 7);
  CHECK(late_windows(t, 1.0).size() == 10);
  for (double r : early_windows(t, 0.3).rul) CHECK(r >= 0.7 - 1e-12);
}

TEST_CASE("prediction curves are clamped and grouped by trajectory") {
  const data::WindowTable t = table_of({1, 2, 3, 1, 2}, 4, {0, 0, 0, 1, 1});
  const std::vector<double> pred{1.5, 0.5, -0.2, 0.75, 0.5};
  const Evaluation ev = evaluate_predictions(t, pred, 0.0);
  REQUIRE(ev.curves.size() == 2);
  CHECK(ev.curves[0].rul_pred == std::vector<double>{1.0, 0.5, 0.0});
  CHECK(ev.curves[1].time == std::vector<double>{1, 2});
  const std::vector<double> clamped{1.0, 0.5, 0.0, 0.75, 0.5};
  CHECK(ev.report == [&] {
    MetricReport r = compute_metrics(clamped, t.rul);
    r.smoothing_sigma = 0.0;
    return r;
  }());
  CHECK_THROWS_AS(evaluate_predictions(t, std::vector<double>{0.1}, 0.0), RulError);
}
