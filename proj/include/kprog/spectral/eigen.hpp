#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kprog/models/koopman.hpp"
#include "kprog/nn/matrix.hpp"

namespace kprog::spectral {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxDimension = 32;

struct Spectrum {
  std::string source;
  std::size_t sample_id = 0;
  // Sorted by descending real part, then descending imaginary part.
  std::vector<std::complex<double>> eigenvalues;
};

// Householder reduction to upper Hessenberg form (similar to the input).
nn::Matrix hessenberg(const nn::Matrix& m);

// All eigenvalues of a real square matrix by Francis double-shift QR on the
// Hessenberg form. Throws ConvergenceError after 500 * d iterations,
// DimensionError on bad shape or non-finite entries.
std::vector<std::complex<double>> eigenvalues(const nn::Matrix& m);
Spectrum spectrum(const nn::Matrix& m, std::string source = {}, std::size_t sample_id = 0);

double spectral_radius(const nn::Matrix& m);

// |im| below this (relative to max(1, |lambda|)) counts as a real eigenvalue.
inline constexpr double kRealTolerance = 1e-9;
bool is_real(std::complex<double> lambda);

// Control windows drawn from one operating-condition interval.
struct ControlSet {
  std::string label;
  double current_low = 0.0;   // amps; a set with current_high <= 0 is not
  double current_high = 0.0;  // used in the low/high comparison
  std::vector<std::vector<double>> controls;  // standardized u vectors
};

struct IntervalSummary {
  std::string label;
  double current_low = 0.0;
  double current_high = 0.0;
  std::size_t samples = 0;
  std::size_t real_count = 0;   // real eigenvalues over all samples
  double real_min = 0.0;        // range of those real eigenvalues
  double real_max = 0.0;
  double mean_dominant_real = 0.0;  // mean over samples of the largest real eigenvalue
  double max_spectral_radius = 0.0;
};

struct SweepResult {
  std::vector<Spectrum> spectra;
  std::vector<IntervalSummary> intervals;
  // Lowest-current set's mean dominant real eigenvalue >= highest-current
  // set's, i.e. slower decay at low current.
  bool low_current_slower = false;
};

SweepResult spectrum_sweep(const models::KidmModel& model, const std::vector<ControlSet>& sets);

// interval_label,sample_id,re,im
void write_spectra_csv(std::ostream& out, const std::vector<Spectrum>& spectra);
void write_spectra_csv(const std::filesystem::path& path, const std::vector<Spectrum>& spectra);

}  // namespace kprog::spectral
