#pragma once

// Independent reference computations used by the tests and the acceptance
// suite. Nothing here calls into the code under test except to read
// parameters.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "kprog/nn/matrix.hpp"
#include "kprog/nn/mlp.hpp"

namespace oracle {

// Scalar-by-scalar forward pass.
inline std::vector<double> mlp_forward(const kprog::nn::Mlp& net, std::vector<double> v) {
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    std::vector<double> out(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double acc = layers[l].bias[r];
      for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * v[c];
      if (l + 1 < layers.size()) {
        const double lambda = 1.0507009873554804934;
        const double alpha = 1.6732632423543772848;
        acc = acc > 0.0 ? lambda * acc : lambda * alpha * (std::exp(acc) - 1.0);
      }
      out[r] = acc;
    }
    v = std::move(out);
  }
  return v;
}

// Central differences of f with respect to every entry of params.
inline std::vector<double> finite_difference(std::vector<double*> params, const std::function<double()>& f,
                                             double step = 1e-4) {
  std::vector<double> out;
  for (double* p : params) {
    const double keep = *p;
    *p = keep + step;
    const double up = f();
    *p = keep - step;
    const double down = f();
    *p = keep;
    out.push_back((up - down) / (2.0 * step));
  }
  return out;
}

inline bool close(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-6) {
  return std::abs(analytic - numeric) <= std::max(abs_floor, rel * std::max(std::abs(analytic), std::abs(numeric)));
}

// Characteristic polynomial coefficients by Faddeev-LeVerrier:
// det(lambda I - A) = sum_k c[k] lambda^k, c[n] = 1.
inline std::vector<double> characteristic_polynomial(const kprog::nn::Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));  // M_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) acc += a(i, p) * m[p][j];
        next[i][j] = acc + (i == j ? c[n - k + 1] : 0.0);
      }
    m = std::move(next);
    // c_{n-k} = -tr(A M_k) / k
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < n; ++p) tr += a(i, p) * m[p][i];
    c[n - k] = -tr / static_cast<double>(k);
  }
  return c;
}

inline std::complex<double> polyval(const std::vector<double>& c, std::complex<double> z) {
  std::complex<double> acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
  return acc;
}

// All roots of a monic polynomial by Durand-Kerner iteration followed by
// Newton polishing.
inline std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& c) {
  const std::size_t n = c.size() - 1;
  std::vector<std::complex<double>> z(n);
  double bound = 0.0;
  for (std::size_t k = 0; k < n; ++k) bound = std::max(bound, std::abs(c[k]));
  const double radius = 1.0 + bound;
  for (std::size_t i = 0; i < n; ++i) z[i] = std::polar(0.5 * radius, 0.4 + 2.0 * M_PI * double(i) / double(n));
  for (int it = 0; it < 5000; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::complex<double> denom = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= z[i] - z[j];
      const std::complex<double> delta = polyval(c, z[i]) / denom;
      z[i] -= delta;
      change = std::max(change, std::abs(delta));
    }
    if (change < 1e-15 * radius) break;
  }
  std::vector<double> d(n);  // derivative coefficients
  for (std::size_t k = 1; k <= n; ++k) d[k - 1] = double(k) * c[k];
  for (auto& r : z)
    for (int it = 0; it < 3; ++it) {
      const auto dp = polyval(d, r);
      if (std::abs(dp) == 0.0) break;
      const auto step = polyval(c, r) / dp;
      if (!(std::abs(step) < 1e-6)) break;
      r -= step;
    }
  return z;
}

// Largest distance in an optimal-by-greedy matching of two multisets of the
// same size.
inline double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  while (!a.empty()) {
    std::size_t bi = 0, bj = 0;
    double best = INFINITY;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        if (std::abs(a[i] - b[j]) < best) {
          best = std::abs(a[i] - b[j]);
          bi = i;
          bj = j;
        }
    worst = std::max(worst, best);
    a.erase(a.begin() + static_cast<std::ptrdiff_t>(bi));
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return worst;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(kprog::nn::Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0) return 0.0;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

}  // namespace oracle
