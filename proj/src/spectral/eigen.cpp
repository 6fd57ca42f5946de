#include "kprog/spectral/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace kprog::spectral {

using nn::Matrix;

Matrix hessenberg(const Matrix& m) {
  nn::require(m.square(), "hessenberg: matrix must be square");
  Matrix a = m;
  const std::size_t n = a.rows();
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = a(k + 1, k) > 0.0 ? -norm : norm;
    double vnorm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = a(i, k) - (i == k + 1 ? alpha : 0.0);
      vnorm += v[i] * v[i];
    }
    if (vnorm == 0.0) continue;
    // A <- H A H with H = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n-1.
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) dot += v[i] * a(i, j);
      const double f = 2.0 * dot / vnorm;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= f * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) dot += a(i, j) * v[j];
      const double f = 2.0 * dot / vnorm;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
  return a;
}

namespace {

double sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (overwritten).
std::vector<std::complex<double>> hessenberg_qr(Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  const std::size_t cap = 500 * static_cast<std::size_t>(n);
  std::size_t total = 0;
  int nn = n - 1;
  int its = 0;
  double t = 0.0;  // accumulated exceptional shifts
  while (nn >= 0) {
    int l = nn;
    for (; l >= 1; --l) {
      double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
      if (s == 0.0) s = anorm;
      if (std::abs(a(l, l - 1)) + s == s) {
        a(l, l - 1) = 0.0;
        break;
      }
    }
    double x = a(nn, nn);
    if (l == nn) {
      out[nn] = {x + t, 0.0};
      --nn;
      its = 0;
      continue;
    }
    double y = a(nn - 1, nn - 1);
    double w = a(nn, nn - 1) * a(nn - 1, nn);
    if (l == nn - 1) {
      const double p = 0.5 * (y - x);
      const double q = p * p + w;
      double z = std::sqrt(std::abs(q));
      x += t;
      if (q >= 0.0) {
        z = p + sign(z, p);
        out[nn - 1] = out[nn] = {x + z, 0.0};
        if (z != 0.0) out[nn] = {x - w / z, 0.0};
      } else {
        out[nn - 1] = {x + p, z};
        out[nn] = {x + p, -z};
      }
      nn -= 2;
      its = 0;
      continue;
    }

    if (total >= cap)
      throw ConvergenceError("eigenvalues: QR iteration did not converge within " + std::to_string(cap) +
                             " iterations");
    if (its > 0 && its % 10 == 0) {
      t += x;
      for (int i = 0; i <= nn; ++i) a(i, i) -= x;
      const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
      y = x = 0.75 * s;
      w = -0.4375 * s * s;
    }
    ++its;
    ++total;

    int m = nn - 2;
    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
    for (; m >= l; --m) {
      z = a(m, m);
      r = x - z;
      double s = y - z;
      p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
      q = a(m + 1, m + 1) - z - r - s;
      r = a(m + 2, m + 1);
      s = std::abs(p) + std::abs(q) + std::abs(r);
      p /= s;
      q /= s;
      r /= s;
      if (m == l) break;
      const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
      const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
      if (u + v == v) break;
    }
    for (int i = m + 2; i <= nn; ++i) {
      a(i, i - 2) = 0.0;
      if (i != m + 2) a(i, i - 3) = 0.0;
    }
    for (int k = m; k <= nn - 1; ++k) {
      if (k != m) {
        p = a(k, k - 1);
        q = a(k + 1, k - 1);
        r = k != nn - 1 ? a(k + 2, k - 1) : 0.0;
        x = std::abs(p) + std::abs(q) + std::abs(r);
        if (x != 0.0) {
          p /= x;
          q /= x;
          r /= x;
        }
      }
      const double s = sign(std::sqrt(p * p + q * q + r * r), p);
      if (s == 0.0) continue;
      if (k == m) {
        if (l != m) a(k, k - 1) = -a(k, k - 1);
      } else {
        a(k, k - 1) = -s * x;
      }
      p += s;
      x = p / s;
      y = q / s;
      z = r / s;
      q /= p;
      r /= p;
      for (int j = k; j <= nn; ++j) {
        double h = a(k, j) + q * a(k + 1, j);
        if (k != nn - 1) {
          h += r * a(k + 2, j);
          a(k + 2, j) -= h * z;
        }
        a(k + 1, j) -= h * y;
        a(k, j) -= h * x;
      }
      const int mmin = std::min(nn, k + 3);
      for (int i = l; i <= mmin; ++i) {
        double h = x * a(i, k) + y * a(i, k + 1);
        if (k != nn - 1) {
          h += z * a(i, k + 2);
          a(i, k + 2) -= h * r;
        }
        a(i, k + 1) -= h * q;
        a(i, k) -= h;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  nn::require(m.square(), "eigenvalues: matrix must be square, got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
  nn::require(m.rows() <= kMaxDimension, "eigenvalues: dimension above " + std::to_string(kMaxDimension));
  nn::require(m.all_finite(), "eigenvalues: non-finite entries");
  if (m.rows() == 0) return {};
  Matrix h = hessenberg(m);
  auto ev = hessenberg_qr(h);
  std::sort(ev.begin(), ev.end(), [](std::complex<double> a, std::complex<double> b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return ev;
}

Spectrum spectrum(const Matrix& m, std::string source, std::size_t sample_id) {
  return {std::move(source), sample_id, eigenvalues(m)};
}

double spectral_radius(const Matrix& m) {
  double r = 0.0;
  for (auto l : eigenvalues(m)) r = std::max(r, std::abs(l));
  return r;
}

bool is_real(std::complex<double> lambda) {
  return std::abs(lambda.imag()) <= kRealTolerance * std::max(1.0, std::abs(lambda));
}

SweepResult spectrum_sweep(const models::KidmModel& model, const std::vector<ControlSet>& sets) {
  if (model.control_operator.layers().empty()) throw std::invalid_argument("spectrum_sweep: untrained model");
  SweepResult result;
  for (const ControlSet& set : sets) {
    if (set.controls.empty()) throw std::invalid_argument("spectrum_sweep: no control windows for " + set.label);
    IntervalSummary sum;
    sum.label = set.label;
    sum.current_low = set.current_low;
    sum.current_high = set.current_high;
    sum.real_min = std::numeric_limits<double>::infinity();
    sum.real_max = -std::numeric_limits<double>::infinity();
    std::size_t dominant_n = 0;
    for (std::size_t i = 0; i < set.controls.size(); ++i) {
      Spectrum s = spectrum(model.operator_for(set.controls[i]), set.label, i);
      double dominant = -std::numeric_limits<double>::infinity();
      for (auto l : s.eigenvalues) {
        sum.max_spectral_radius = std::max(sum.max_spectral_radius, std::abs(l));
        if (!is_real(l)) continue;
        ++sum.real_count;
        sum.real_min = std::min(sum.real_min, l.real());
        sum.real_max = std::max(sum.real_max, l.real());
        dominant = std::max(dominant, l.real());
      }
      if (std::isfinite(dominant)) {
        sum.mean_dominant_real += dominant;
        ++dominant_n;
      }
      result.spectra.push_back(std::move(s));
    }
    sum.samples = set.controls.size();
    sum.mean_dominant_real =
        dominant_n > 0 ? sum.mean_dominant_real / static_cast<double>(dominant_n) : std::nan("");
    if (sum.real_count == 0) sum.real_min = sum.real_max = std::nan("");
    result.intervals.push_back(sum);
  }

  const IntervalSummary* low = nullptr;
  const IntervalSummary* high = nullptr;
  for (const auto& s : result.intervals) {
    if (s.current_high <= 0.0) continue;
    const double mid = 0.5 * (s.current_low + s.current_high);
    if (!low || mid < 0.5 * (low->current_low + low->current_high)) low = &s;
    if (!high || mid > 0.5 * (high->current_low + high->current_high)) high = &s;
  }
  result.low_current_slower = low && high && low != high && low->mean_dominant_real >= high->mean_dominant_real;
  return result;
}

void write_spectra_csv(std::ostream& out, const std::vector<Spectrum>& spectra) {
  out << "interval_label,sample_id,re,im\n";
  char buf[96];
  for (const auto& s : spectra)
    for (auto l : s.eigenvalues) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", s.sample_id, l.real(), l.imag());
      out << s.source << buf;
    }
}

void write_spectra_csv(const std::filesystem::path& path, const std::vector<Spectrum>& spectra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_spectra_csv(out, spectra);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace kprog::spectral
