#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kprog/battery/simulator.hpp"
#include "kprog/data/series.hpp"
#include "kprog/data/windows.hpp"
#include "kprog/experiment/config.hpp"
#include "kprog/models/bundle.hpp"
#include "kprog/rul/evaluation.hpp"
#include "kprog/spectral/eigen.hpp"

namespace kprog::experiment {

// Named seed streams derived from ExperimentConfig::data_seed.
enum SeedStream : std::uint64_t {
  kFleetStream = 1,
  kSplitStream = 2,
  kNoiseStream = 3,
  kExtrapolationStream = 4,
  kSpectrumStream = 5,
};

struct Fleet {
  battery::LoadProfile profile;
  std::uint64_t base_seed = 0;
  data::SplitSpec split_spec;
  data::Split split;
  std::vector<data::TimeSeries> series;
  std::vector<std::uint64_t> seeds;   // per-trajectory simulator seeds
  std::vector<std::size_t> cycles;    // discharge cycles to end of life
};

// train_count + test_count run-to-failure trajectories, split disjointly.
// The raw trajectories are moved into *trajectories when requested.
Fleet simulate_fleet(const battery::LoadProfile& profile, const data::SplitSpec& split, std::uint64_t data_seed,
                     std::vector<battery::Trajectory>* trajectories = nullptr);

// count trajectories as series, ids prefixed with label.
std::vector<data::TimeSeries> simulate_series(const battery::LoadProfile& profile, std::size_t count,
                                              std::uint64_t seed, const std::string& label);

// traj_NNNN.csv per trajectory plus manifest.json.
void write_fleet(const std::filesystem::path& dir, const Fleet& fleet,
                 const std::vector<battery::Trajectory>& trajectories, bool include_hidden);
nlohmann::json fleet_manifest(const Fleet& fleet, bool include_hidden);
// Throws DataError when the manifest or a listed file is missing or malformed.
Fleet load_fleet(const std::filesystem::path& dir);

// Adds N(0, sigma^2) to voltage_v and temperature_k of every series.
void add_measurement_noise(std::vector<data::TimeSeries>& series, double sigma, std::uint64_t seed);

// Train / test / supervision series after noise, with the standardizer
// fitted on the training series.
struct Prepared {
  data::Standardizer normalization;
  std::vector<data::TimeSeries> train;
  std::vector<data::TimeSeries> test;
  std::vector<data::TimeSeries> supervision;
};

Prepared prepare(const Fleet& fleet, double noise_sigma, std::uint64_t noise_seed);

struct Tables {
  data::WindowLayout layout;
  data::WindowTable train;
  data::WindowTable test;
  data::WindowTable supervision;
};

Tables make_tables(const Prepared& prepared, models::ModelKind kind, std::size_t window_size);

struct ModelRun {
  models::ModelBundle bundle;
  models::TrainHistory history;
  std::optional<rul::RulEstimator> estimator;  // absent for fnn
};

// Builds, trains and (for observable models) fits the linear RUL head on the
// supervision windows.
ModelRun train_run(const Tables& tables, const data::Standardizer& normalization, const ExperimentConfig& config,
                   models::ModelKind kind, std::uint64_t seed);

rul::Evaluation evaluate_run(const ModelRun& run, const data::WindowTable& test, const ExperimentConfig& config);

// {"model", "mse", "mae", "mape", "n", "excluded_mape", "smoothing_sigma", "seed"}
nlohmann::json report_json(models::ModelKind kind, const rul::MetricReport& report, std::uint64_t seed);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
};
Stat stat(const std::vector<double>& values);

// {"mse": {"mean", "std"}, "mae": ..., "mape": ..., "runs": n}
nlohmann::json summarize(const std::vector<rul::MetricReport>& reports);

// Discharge-only control windows per interval from freshly simulated
// varying-load trajectories, plus one set of rest/charge windows.
std::vector<spectral::ControlSet> control_sets(const ExperimentConfig& config, const data::Standardizer& norm,
                                               const data::WindowLayout& layout);

nlohmann::json to_json(const spectral::SweepResult& sweep);

std::string range_label(const battery::CurrentRange& range);

}  // namespace kprog::experiment
