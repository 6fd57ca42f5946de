#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kprog/battery/simulator.hpp"
#include "kprog/data/windows.hpp"
#include "kprog/models/bundle.hpp"

namespace kprog::experiment {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kConfigFormatVersion = 1;

struct StudyConfig {
  std::vector<double> noise_sigmas{0.01, 0.05, 0.1, 0.5, 1.0};
  std::vector<models::ModelKind> noise_models{models::ModelKind::ae, models::ModelKind::fnn, models::ModelKind::dko};
  // early, extrapolate
  std::vector<models::ModelKind> compare_models{models::ModelKind::kidm, models::ModelKind::kidmae,
                                                models::ModelKind::ae};
  double early_fraction = 0.3;
  battery::CurrentRange extrapolation_train{1.5, 2.5};
  std::vector<battery::CurrentRange> extrapolation_test{{1.0, 1.5}, {2.5, 3.0}};
  std::vector<battery::CurrentRange> spectrum_intervals{{1.0, 1.5}, {1.5, 2.5}, {2.5, 3.0}};
  std::size_t spectrum_trajectories = 2;  // simulated per interval
  std::size_t spectrum_samples = 200;     // control windows kept per interval
};

struct ExperimentConfig {
  int format_version = kConfigFormatVersion;
  battery::LoadProfile profile = battery::LoadProfile::varying_load();
  data::SplitSpec split;
  std::uint64_t data_seed = 1;  // fleet simulation, split and noise
  double noise_sigma = 0.0;     // measurement noise on every trajectory
  models::ModelKind model = models::ModelKind::kidm;
  std::size_t window_size = 100;
  std::size_t observable_dim = 5;
  models::NetworkShape network;
  models::TrainConfig train;  // train.seed is replaced per model seed
  double ridge = 1e-8;
  double smoothing_sigma = 5.0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string data_dir;  // fleet directory; empty means <out_dir>/fleet
  std::string out_dir = "runs/default";
  StudyConfig study;

  void validate() const;
};

// Defaults per load mode: constant 70 + 30 trajectories with a dko model,
// varying 100 + 100 with kidm; one supervision trajectory in both.
ExperimentConfig default_config(battery::LoadMode mode);

// Missing keys take the defaults of the document's load mode; unknown keys
// and a wrong format_version are ConfigErrors.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json to_json(const data::SplitSpec& split);
nlohmann::json to_json(const models::TrainConfig& train);
nlohmann::json to_json(const models::NetworkShape& shape);

}  // namespace kprog::experiment
