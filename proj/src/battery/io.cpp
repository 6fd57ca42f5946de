#include "kprog/battery/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace kprog::battery {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.write(buf, n);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& t, bool include_hidden) {
  out << "time_s,voltage_v,temperature_k,current_a,soc,capacity_frac";
  if (include_hidden) out << ",q_max,r0_ohm,d,rul_norm";
  out << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    put(out, t.time[k]);
    for (double v : {t.voltage[k], t.temperature[k], t.current[k], t.soc[k], t.capacity[k]}) {
      out << ',';
      put(out, v);
    }
    if (include_hidden) {
      const double rul = t.reached_eol ? (t.eol_time - t.time[k]) / t.eol_time : 1.0;
      for (double v : {t.q_max[k], t.r0[k], t.d[k], rul}) {
        out << ',';
        put(out, v);
      }
    }
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t, bool include_hidden) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(out, t, include_hidden);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::json to_json(const LoadProfile& p) {
  return {{"mode", to_string(p.mode)},
          {"discharge_current_range", {p.discharge_current_range.low, p.discharge_current_range.high}},
          {"charge_current", p.charge_current},
          {"soc_low", p.soc_low},
          {"soc_high", p.soc_high},
          {"rest_steps", p.rest_steps},
          {"segment_length_range", {p.segment_min_steps, p.segment_max_steps}},
          {"dt", p.dt},
          {"max_cycles", p.max_cycles}};
}

LoadProfile load_profile_from_json(const nlohmann::json& doc) {
  const LoadMode mode = load_mode_from_string(doc.value("mode", std::string("constant")));
  LoadProfile p = mode == LoadMode::constant ? LoadProfile::constant_load() : LoadProfile::varying_load();
  if (doc.contains("discharge_current_range")) {
    const auto& r = doc.at("discharge_current_range");
    p.discharge_current_range = {r.at(0).get<double>(), r.at(1).get<double>()};
  }
  p.charge_current = doc.value("charge_current", p.charge_current);
  p.soc_low = doc.value("soc_low", p.soc_low);
  p.soc_high = doc.value("soc_high", p.soc_high);
  p.rest_steps = doc.value("rest_steps", p.rest_steps);
  if (doc.contains("segment_length_range")) {
    const auto& r = doc.at("segment_length_range");
    p.segment_min_steps = r.at(0).get<std::int64_t>();
    p.segment_max_steps = r.at(1).get<std::int64_t>();
  }
  p.dt = doc.value("dt", p.dt);
  p.max_cycles = doc.value("max_cycles", p.max_cycles);
  p.validate();
  return p;
}

nlohmann::json to_json(const HealthParams& h) {
  return {{"q_max", h.q_max}, {"r0_ohm", h.r0}, {"d", h.d}};
}

}  // namespace kprog::battery
