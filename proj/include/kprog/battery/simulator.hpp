#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kprog/battery/cell.hpp"

namespace kprog::battery {

enum class LoadMode { constant, varying };

std::string to_string(LoadMode mode);
LoadMode load_mode_from_string(const std::string& name);

struct CurrentRange {
  double low = 1.0;
  double high = 1.0;
  friend bool operator==(const CurrentRange&, const CurrentRange&) = default;
};

struct LoadProfile {
  LoadMode mode = LoadMode::constant;
  // Constant mode draws one discharge current per trajectory from this range
  // (a single value when low == high); varying mode redraws it per segment.
  CurrentRange discharge_current_range{1.0, 1.0};
  double charge_current = -1.0;  // negative charges the cell
  double soc_low = 0.05;
  double soc_high = 0.95;
  std::int64_t rest_steps = 0;
  std::int64_t segment_min_steps = 100;
  std::int64_t segment_max_steps = 300;
  double dt = 2.0;
  std::int64_t max_cycles = 1000;

  static LoadProfile constant_load(double discharge_current = 1.0);
  static LoadProfile varying_load(CurrentRange range = {1.5, 2.5});

  void validate() const;

  friend bool operator==(const LoadProfile&, const LoadProfile&) = default;
};

// Fraction of the initial capacity at which the cell reaches end of life.
inline constexpr double kEndOfLifeCapacity = 0.8;

struct Trajectory {
  // Per-timestep channels; sample k is the state after the k-th step, so
  // time[k] = (k + 1) * dt.
  std::vector<double> time;
  std::vector<double> voltage;
  std::vector<double> temperature;
  std::vector<double> current;
  std::vector<double> soc;
  std::vector<double> capacity;  // latest measured discharge capacity / fresh capacity
  std::vector<double> q_max;
  std::vector<double> r0;
  std::vector<double> d;
  std::vector<std::int64_t> cycle;

  std::vector<double> cycle_capacities;  // one entry per completed discharge
  bool reached_eol = false;
  double eol_time = 0.0;

  std::uint64_t seed = 0;
  LoadProfile profile;
  HealthParams initial_health;

  std::size_t size() const { return time.size(); }
  std::size_t cycles() const { return cycle_capacities.size(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

class NonTerminatingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Alternates discharge (to soc_low) / rest (varying mode) / charge (to
// soc_high) until the first discharge whose measured capacity is at most
// 80% of the fresh capacity; the trajectory ends with that discharge.
Trajectory run_to_failure(const LoadProfile& profile, const HealthParams& initial,
                          std::uint64_t seed, const CellConstants& constants = {});

// q_max ~ U(7500, 7600), r0 ~ U(0.107215, 0.127215), d nominal.
HealthParams sample_initial_conditions(std::uint64_t seed, const CellConstants& constants = {});

// Adds i.i.d. N(0, sigma^2) to the voltage and temperature channels only.
Trajectory inject_noise(const Trajectory& trajectory, double sigma, std::uint64_t seed);

// count trajectories with per-trajectory seeds derived from base_seed.
std::vector<Trajectory> simulate_fleet(const LoadProfile& profile, std::size_t count,
                                       std::uint64_t base_seed, const CellConstants& constants = {});

}  // namespace kprog::battery
