#include "kprog/battery/cell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kprog::battery {

double open_circuit_voltage(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 3.0 + 1.2 * s + 0.15 * std::log(s + 0.01) - 0.15 * std::log(1.01 - s);
}

double terminal_voltage(const BatteryState& state, double current) {
  return open_circuit_voltage(state.surface_soc) - current * state.health.r0;
}

HealthParams degrade(const HealthParams& health, double current, double dt,
                     const CellConstants& c) {
  if (!(dt > 0.0)) throw std::invalid_argument("degrade: dt must be > 0");
  const double stress = std::pow(std::abs(current), c.degradation_exponent) * dt;
  HealthParams next = health;
  next.q_max = health.q_max - c.capacity_fade_rate * stress;
  next.r0 = health.r0 + c.resistance_growth_rate * stress;
  next.d = health.d * (1.0 - c.diffusion_fade_rate * stress);
  return next;
}

BatteryState step(const BatteryState& state, double current, double dt, const CellConstants& c) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  const double capacity = c.coulombs_per_ion * state.health.q_max;
  const double drain = current * dt / capacity;

  BatteryState next = state;
  next.soc = std::clamp(state.soc - drain, 0.0, 1.0);
  const double exchange = c.diffusion_rate * state.health.d * (state.soc - state.surface_soc) * dt;
  next.surface_soc = std::clamp(state.surface_soc - drain / c.surface_fraction + exchange, 0.0, 1.0);

  const double heat = current * current * state.health.r0;
  const double loss = c.heat_transfer * (state.temperature - c.ambient_temperature);
  next.temperature = state.temperature + dt * (heat - loss) / c.heat_capacity;

  next.health = current == 0.0 ? state.health : degrade(state.health, current, dt, c);
  next.time = state.time + dt;
  return next;
}

}  // namespace kprog::battery
