#include "kprog/battery/simulator.hpp"

#include <cmath>

#include "kprog/core/rng.hpp"

namespace kprog::battery {

std::string to_string(LoadMode mode) { return mode == LoadMode::constant ? "constant" : "varying"; }

LoadMode load_mode_from_string(const std::string& name) {
  if (name == "constant") return LoadMode::constant;
  if (name == "varying") return LoadMode::varying;
  throw std::invalid_argument("unknown load mode '" + name + "'");
}

LoadProfile LoadProfile::constant_load(double discharge_current) {
  LoadProfile p;
  p.mode = LoadMode::constant;
  p.discharge_current_range = {discharge_current, discharge_current};
  p.charge_current = -1.0;
  p.rest_steps = 0;
  return p;
}

LoadProfile LoadProfile::varying_load(CurrentRange range) {
  LoadProfile p;
  p.mode = LoadMode::varying;
  p.discharge_current_range = range;
  p.charge_current = -3.0;
  p.rest_steps = 30;
  p.segment_min_steps = 100;
  p.segment_max_steps = 300;
  return p;
}

void LoadProfile::validate() const {
  if (!(discharge_current_range.low <= discharge_current_range.high))
    throw std::invalid_argument("load profile: discharge range low > high");
  if (!(discharge_current_range.low > 0.0))
    throw std::invalid_argument("load profile: discharge current must be positive");
  if (!(charge_current < 0.0)) throw std::invalid_argument("load profile: charge current must be negative");
  if (!(soc_low >= 0.0 && soc_low < soc_high && soc_high <= 1.0))
    throw std::invalid_argument("load profile: need 0 <= soc_low < soc_high <= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("load profile: dt must be > 0");
  if (rest_steps < 0) throw std::invalid_argument("load profile: rest_steps must be >= 0");
  if (segment_min_steps < 1 || segment_min_steps > segment_max_steps)
    throw std::invalid_argument("load profile: bad segment length range");
  if (max_cycles < 1) throw std::invalid_argument("load profile: max_cycles must be >= 1");
}

namespace {

class Recorder {
 public:
  Recorder(Trajectory& t, const CellConstants& c) : t_(t), c_(c) {}

  BatteryState advance(const BatteryState& state, double current, double dt, double capacity) {
    BatteryState next = step(state, current, dt, c_);
    t_.time.push_back(next.time);
    t_.voltage.push_back(terminal_voltage(next, current));
    t_.temperature.push_back(next.temperature);
    t_.current.push_back(current);
    t_.soc.push_back(next.soc);
    t_.capacity.push_back(capacity);
    t_.q_max.push_back(next.health.q_max);
    t_.r0.push_back(next.health.r0);
    t_.d.push_back(next.health.d);
    t_.cycle.push_back(next.cycle_index);
    return next;
  }

 private:
  Trajectory& t_;
  const CellConstants& c_;
};

}  // namespace

Trajectory run_to_failure(const LoadProfile& profile, const HealthParams& initial, std::uint64_t seed,
                          const CellConstants& constants) {
  profile.validate();
  if (!(initial.q_max > 0.0 && initial.r0 > 0.0 && initial.d > 0.0))
    throw std::invalid_argument("run_to_failure: health parameters must be positive");

  Rng rng(seed);
  Trajectory out;
  out.seed = seed;
  out.profile = profile;
  out.initial_health = initial;

  BatteryState state;
  state.soc = profile.soc_high;
  state.surface_soc = profile.soc_high;
  state.temperature = constants.ambient_temperature;
  state.health = initial;

  const auto& range = profile.discharge_current_range;
  const double constant_current =
      range.low == range.high ? range.low : rng.uniform(range.low, range.high);
  const double fresh_capacity =
      (profile.soc_high - profile.soc_low) * constants.coulombs_per_ion * initial.q_max;

  Recorder rec(out, constants);
  double capacity = 1.0;
  for (std::int64_t cycle = 0; cycle < profile.max_cycles; ++cycle) {
    state.cycle_index = cycle;

    double delivered = 0.0;
    double current = constant_current;
    std::int64_t segment_left = 0;
    while (state.soc > profile.soc_low) {
      if (profile.mode == LoadMode::varying && segment_left == 0) {
        current = rng.uniform(range.low, range.high);
        segment_left = rng.integer(profile.segment_min_steps, profile.segment_max_steps);
      }
      state = rec.advance(state, current, profile.dt, capacity);
      delivered += current * profile.dt;
      --segment_left;
    }
    // Remove the overshoot past soc_low so the measurement does not depend on
    // where the sampling grid happens to cross the cutoff.
    delivered -= (profile.soc_low - state.soc) * constants.coulombs_per_ion * state.health.q_max;
    capacity = delivered / fresh_capacity;
    out.cycle_capacities.push_back(capacity);
    out.capacity.back() = capacity;

    if (capacity <= kEndOfLifeCapacity) {
      out.reached_eol = true;
      out.eol_time = state.time;
      return out;
    }

    if (profile.mode == LoadMode::varying)
      for (std::int64_t k = 0; k < profile.rest_steps; ++k)
        state = rec.advance(state, 0.0, profile.dt, capacity);

    while (state.soc < profile.soc_high)
      state = rec.advance(state, profile.charge_current, profile.dt, capacity);
  }
  throw NonTerminatingError("run_to_failure: no end of life within " +
                            std::to_string(profile.max_cycles) +
                            " cycles (are the degradation rates zero?)");
}

HealthParams sample_initial_conditions(std::uint64_t seed, const CellConstants& constants) {
  Rng rng(seed);
  HealthParams h;
  h.q_max = rng.uniform(7500.0, 7600.0);
  h.r0 = rng.uniform(0.107215, 0.127215);
  h.d = constants.nominal_diffusion;
  return h;
}

Trajectory inject_noise(const Trajectory& trajectory, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("inject_noise: sigma must be >= 0");
  Trajectory out = trajectory;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.voltage) v += rng.normal(0.0, sigma);
  for (double& t : out.temperature) t += rng.normal(0.0, sigma);
  return out;
}

std::vector<Trajectory> simulate_fleet(const LoadProfile& profile, std::size_t count,
                                       std::uint64_t base_seed, const CellConstants& constants) {
  std::vector<Trajectory> fleet;
  fleet.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed(base_seed, 0, i);
    const HealthParams initial = sample_initial_conditions(derive_seed(seed, 1), constants);
    fleet.push_back(run_to_failure(profile, initial, derive_seed(seed, 2), constants));
  }
  return fleet;
}

}  // namespace kprog::battery
