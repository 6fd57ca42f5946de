#include "kprog/experiment/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kprog/battery/io.hpp"
#include "kprog/core/rng.hpp"

namespace kprog::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trajectory_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%04zu.csv", i);
  return buf;
}

}  // namespace

Fleet simulate_fleet(const battery::LoadProfile& profile, const data::SplitSpec& split_spec, std::uint64_t data_seed,
                     std::vector<battery::Trajectory>* trajectories) {
  split_spec.validate();
  const std::size_t count = split_spec.train_count + split_spec.test_count;
  const std::uint64_t base = derive_seed(data_seed, kFleetStream);
  std::vector<battery::Trajectory> runs = battery::simulate_fleet(profile, count, base);

  Fleet f;
  f.profile = profile;
  f.base_seed = base;
  f.split_spec = split_spec;
  f.split = data::split(count, split_spec, derive_seed(data_seed, kSplitStream));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    f.series.push_back(data::to_series(runs[i], "traj_" + std::to_string(i)));
    f.seeds.push_back(runs[i].seed);
    f.cycles.push_back(runs[i].cycles());
  }
  if (trajectories) *trajectories = std::move(runs);
  return f;
}

std::vector<data::TimeSeries> simulate_series(const battery::LoadProfile& profile, std::size_t count,
                                              std::uint64_t seed, const std::string& label) {
  std::vector<data::TimeSeries> out;
  const auto runs = battery::simulate_fleet(profile, count, seed);
  for (std::size_t i = 0; i < runs.size(); ++i) out.push_back(data::to_series(runs[i], label + "_" + std::to_string(i)));
  return out;
}

json fleet_manifest(const Fleet& f, bool include_hidden) {
  json trajs = json::array();
  for (std::size_t i = 0; i < f.series.size(); ++i) {
    trajs.push_back({{"file", trajectory_file(i)},
                     {"seed", f.seeds[i]},
                     {"cycles", f.cycles[i]},
                     {"steps", f.series[i].size()},
                     {"eol_time", f.series[i].eol_time.value_or(0.0)}});
  }
  return {{"format_version", kConfigFormatVersion},
          {"profile", battery::to_json(f.profile)},
          {"base_seed", f.base_seed},
          {"split_spec",
           {{"train_count", f.split_spec.train_count},
            {"test_count", f.split_spec.test_count},
            {"rul_supervision_count", f.split_spec.rul_supervision_count}}},
          {"split", {{"train", f.split.train}, {"test", f.split.test}, {"supervision", f.split.supervision}}},
          {"include_hidden", include_hidden},
          {"trajectories", trajs}};
}

void write_fleet(const fs::path& dir, const Fleet& f, const std::vector<battery::Trajectory>& trajectories,
                 bool include_hidden) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    battery::write_trajectory_csv(dir / trajectory_file(i), trajectories[i], include_hidden);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << fleet_manifest(f, include_hidden).dump(2) << "\n";
}

Fleet load_fleet(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw data::DataError("no fleet manifest at '" + manifest.string() + "' (run simulate first)");
  try {
    const json doc = json::parse(in);
    Fleet f;
    f.profile = battery::load_profile_from_json(doc.at("profile"));
    f.base_seed = doc.at("base_seed").get<std::uint64_t>();
    const json& s = doc.at("split_spec");
    f.split_spec = {s.at("train_count").get<std::size_t>(), s.at("test_count").get<std::size_t>(),
                    s.at("rul_supervision_count").get<std::size_t>()};
    f.split.train = doc.at("split").at("train").get<std::vector<std::size_t>>();
    f.split.test = doc.at("split").at("test").get<std::vector<std::size_t>>();
    f.split.supervision = doc.at("split").at("supervision").get<std::vector<std::size_t>>();
    for (const json& t : doc.at("trajectories")) {
      data::TimeSeries series = data::read_series_csv(dir / t.at("file").get<std::string>());
      series.rul.reset();  // labels come from the end-of-life time, as for simulated fleets
      f.series.push_back(std::move(series));
      f.seeds.push_back(t.at("seed").get<std::uint64_t>());
      f.cycles.push_back(t.at("cycles").get<std::size_t>());
    }
    for (const auto* part : {&f.split.train, &f.split.test, &f.split.supervision})
      for (std::size_t i : *part)
        if (i >= f.series.size()) throw data::DataError("manifest split index out of range");
    return f;
  } catch (const json::exception& e) {
    throw data::DataError("malformed fleet manifest '" + manifest.string() + "': " + e.what());
  }
}

void add_measurement_noise(std::vector<data::TimeSeries>& series, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return;
  for (std::size_t i = 0; i < series.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    for (const char* name : {"voltage_v", "temperature_k"}) {
      auto& ch = series[i].channels[series[i].channel_index(name)];
      for (double& v : ch) v += rng.normal(0.0, sigma);
    }
  }
}

Prepared prepare(const Fleet& fleet, double noise_sigma, std::uint64_t noise_seed) {
  std::vector<data::TimeSeries> all = fleet.series;
  add_measurement_noise(all, noise_sigma, noise_seed);
  Prepared p;
  p.train = data::select(all, fleet.split.train);
  p.test = data::select(all, fleet.split.test);
  p.supervision = data::select(all, fleet.split.supervision);
  p.normalization = data::Standardizer::fit(p.train, {"voltage_v", "temperature_k", "current_a"});
  return p;
}

Tables make_tables(const Prepared& p, models::ModelKind kind, std::size_t window_size) {
  Tables t;
  t.layout = models::battery_layout_for(kind, window_size);
  t.train = data::build_table(p.train, t.layout, &p.normalization);
  t.test = data::build_table(p.test, t.layout, &p.normalization);
  t.supervision = data::build_table(p.supervision, t.layout, &p.normalization);
  return t;
}

ModelRun train_run(const Tables& tables, const data::Standardizer& normalization, const ExperimentConfig& config,
                   models::ModelKind kind, std::uint64_t seed) {
  ModelRun run;
  run.bundle = models::make_bundle(kind, tables.layout, normalization, config.observable_dim, config.train.horizon,
                                   config.network, seed);
  models::TrainConfig tc = config.train;
  tc.seed = seed;
  run.history = models::train_bundle(run.bundle, tables.train, tables.supervision, tc);
  if (kind != models::ModelKind::fnn) run.estimator = rul::fit_estimator(run.bundle, tables.supervision, config.ridge);
  return run;
}

rul::Evaluation evaluate_run(const ModelRun& run, const data::WindowTable& test, const ExperimentConfig& config) {
  return rul::evaluate(run.bundle, run.estimator ? &*run.estimator : nullptr, test, config.smoothing_sigma);
}

json report_json(models::ModelKind kind, const rul::MetricReport& r, std::uint64_t seed) {
  json out = rul::to_json(r);
  out["model"] = models::to_string(kind);
  out["seed"] = seed;
  return out;
}

Stat stat(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

json summarize(const std::vector<rul::MetricReport>& reports) {
  std::vector<double> mse, mae, mape;
  for (const auto& r : reports) {
    mse.push_back(r.mse);
    mae.push_back(r.mae);
    mape.push_back(r.mape);
  }
  auto j = [](const Stat& s) { return json{{"mean", s.mean}, {"std", s.std}}; };
  return {{"mse", j(stat(mse))}, {"mae", j(stat(mae))}, {"mape", j(stat(mape))}, {"runs", reports.size()}};
}

std::string range_label(const battery::CurrentRange& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%gA-%gA", r.low, r.high);
  return buf;
}

std::vector<spectral::ControlSet> control_sets(const ExperimentConfig& config, const data::Standardizer& norm,
                                               const data::WindowLayout& layout) {
  if (layout.control_channels.size() != 1 || layout.control_channels[0] != "current_a")
    throw std::invalid_argument("control_sets: layout must take the current as its only control channel");
  const std::size_t w = layout.window_size;
  std::vector<spectral::ControlSet> sets;
  spectral::ControlSet idle{"rest_charge", 0.0, 0.0, {}};
  for (std::size_t k = 0; k < config.study.spectrum_intervals.size(); ++k) {
    const auto& range = config.study.spectrum_intervals[k];
    battery::LoadProfile profile = config.profile;
    profile.mode = battery::LoadMode::varying;
    profile.discharge_current_range = range;
    const auto series = simulate_series(profile, config.study.spectrum_trajectories,
                                        derive_seed(config.data_seed, kSpectrumStream, k), "spectrum");
    spectral::ControlSet set{range_label(range), range.low, range.high, {}};
    for (const auto& s : series) {
      const auto windows = data::windowize(s, layout, &norm);
      const auto& current = s.channel("current_a");
      for (const auto& win : windows) {
        const auto first = current.begin() + static_cast<std::ptrdiff_t>(win.start);
        const auto last = first + static_cast<std::ptrdiff_t>(w);
        if (std::all_of(first, last, [](double i) { return i > 0.0; }))
          set.controls.push_back(win.u);
        else if (k == 0 && std::all_of(first, last, [](double i) { return i <= 0.0; }))
          idle.controls.push_back(win.u);
      }
    }
    sets.push_back(std::move(set));
  }
  sets.push_back(std::move(idle));

  // Evenly thin each set to at most spectrum_samples windows.
  const std::size_t cap = config.study.spectrum_samples;
  for (auto& set : sets) {
    if (cap == 0 || set.controls.size() <= cap) continue;
    std::vector<std::vector<double>> kept;
    for (std::size_t i = 0; i < cap; ++i) kept.push_back(set.controls[i * set.controls.size() / cap]);
    set.controls = std::move(kept);
  }
  std::erase_if(sets, [](const spectral::ControlSet& s) { return s.controls.empty(); });
  return sets;
}

json to_json(const spectral::SweepResult& sweep) {
  json intervals = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& s : sweep.intervals)
    intervals.push_back({{"label", s.label},
                         {"current_low", s.current_low},
                         {"current_high", s.current_high},
                         {"samples", s.samples},
                         {"real_eigenvalues", s.real_count},
                         {"real_min", num(s.real_min)},
                         {"real_max", num(s.real_max)},
                         {"mean_dominant_real", num(s.mean_dominant_real)},
                         {"max_spectral_radius", s.max_spectral_radius}});
  return {{"intervals", intervals}, {"low_current_slower", sweep.low_current_slower}};
}

}  // namespace kprog::experiment
