#pragma once

#include <filesystem>
#include <ostream>

#include "json.hpp"
#include "kprog/battery/simulator.hpp"

namespace kprog::battery {

// time_s,voltage_v,temperature_k,current_a,soc,capacity_frac[,q_max,r0_ohm,d,rul_norm]
// Values are written with 17 significant digits so they read back bit-exact.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, bool include_hidden);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          bool include_hidden);

nlohmann::json to_json(const LoadProfile& profile);
LoadProfile load_profile_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const HealthParams& health);

}  // namespace kprog::battery
