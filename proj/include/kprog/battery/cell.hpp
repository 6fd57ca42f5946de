#pragma once

#include <cstdint>

namespace kprog::battery {

// Hidden health parameters. q_max is an ion count, r0 in Ohm, d is a
// unitless diffusion rate (1.0 for a fresh cell).
struct HealthParams {
  double q_max = 7550.0;
  double r0 = 0.117215;
  double d = 1.0;

  friend bool operator==(const HealthParams&, const HealthParams&) = default;
};

struct BatteryState {
  double soc = 0.95;          // bulk state of charge in [0, 1]
  double surface_soc = 0.95;  // polarization-lagged charge fraction seen by the OCV
  double temperature = 292.1; // Kelvin
  HealthParams health;
  std::int64_t cycle_index = 0;
  double time = 0.0;          // seconds

  friend bool operator==(const BatteryState&, const BatteryState&) = default;
};

// Constants of the equivalent-circuit surrogate: OCV curve + IR drop + one
// two-tank polarization lag, a lumped thermal node, and a power-law
// degradation of the health parameters in |current|.
struct CellConstants {
  // Coulombs per ion: a fresh cell (q_max 7550) at 1 A needs ~1.6 h to go
  // from soc 0.95 to 0.05.
  double coulombs_per_ion = 0.85;
  // Fraction of the charge reachable at the electrode surface; the surface
  // tank drains 1/surface_fraction times faster than the bulk.
  double surface_fraction = 0.7;
  // Surface/bulk exchange rate at d = 1, 1/s.
  double diffusion_rate = 1.0 / 300.0;

  double ambient_temperature = 292.1;  // K
  double heat_transfer = 0.1;          // W/K
  double heat_capacity = 50.0;         // J/K

  double degradation_exponent = 2.0;   // gamma
  double capacity_fade_rate = 2.8e-3;  // ions / (A^gamma s)
  double resistance_growth_rate = 1.0e-7;  // Ohm / (A^gamma s)
  double diffusion_fade_rate = 8.8e-7;     // 1 / (A^gamma s)

  double nominal_diffusion = 1.0;
};

// Open-circuit voltage, monotone increasing on [0, 1].
double open_circuit_voltage(double surface_soc);

// OCV(surface_soc) - current * r0. Positive current discharges.
double terminal_voltage(const BatteryState& state, double current);

HealthParams degrade(const HealthParams& health, double current, double dt,
                     const CellConstants& constants = {});

// One explicit-Euler step of length dt under a constant current.
BatteryState step(const BatteryState& state, double current, double dt,
                  const CellConstants& constants = {});

}  // namespace kprog::battery
