#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "kprog/experiment/commands.hpp"
#include "kprog/experiment/config.hpp"
#include "kprog/experiment/pipeline.hpp"

using namespace kprog;
using namespace kprog::experiment;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kprog_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c = default_config(battery::LoadMode::varying);
  c.split = {3, 2, 1};
  c.window_size = 50;
  c.observable_dim = 3;
  c.network = {2, 8};
  c.train.epochs = 2;
  c.train.horizon = 3;
  c.train.max_batches_per_epoch = 4;
  c.train.learning_rate = 1e-3;
  c.seeds = {0, 1};
  c.study.noise_sigmas = {0.1};
  c.study.spectrum_samples = 5;
  c.study.spectrum_trajectories = 1;
  return c;
}

fs::path write_config(const fs::path& dir, const ExperimentConfig& c) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << to_json(c).dump(2);
  return p;
}

int cli(std::vector<std::string> args, std::string* log = nullptr) {
  std::ostringstream out;
  const int code = run_cli(args, out);
  if (log) *log = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip and validation") {
  for (auto mode : {battery::LoadMode::constant, battery::LoadMode::varying}) {
    const ExperimentConfig c = default_config(mode);
    CHECK_NOTHROW(c.validate());
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  }
  CHECK(default_config(battery::LoadMode::constant).split.train_count == 70);
  CHECK(default_config(battery::LoadMode::varying).split.train_count == 100);

  json doc = to_json(tiny_config());
  doc["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = to_json(tiny_config());
  doc.erase("format_version");
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = to_json(tiny_config());
  doc["model"] = "transformer";
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = to_json(tiny_config());
  doc["window_size"] = 0;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
}

TEST_CASE("usage and data errors map to exit codes") {
  const fs::path dir = fresh_dir("errors");
  const fs::path cfg = write_config(dir, tiny_config());
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"frobnicate"}) == kExitUsage);
  CHECK(cli({"train"}) == kExitUsage);
  CHECK(cli({"study", "bogus", "--config", cfg.string()}) == kExitUsage);
  CHECK(cli({"train", "--config", (dir / "missing.json").string()}) == kExitUsage);
  std::string log;
  CHECK(cli({"evaluate", "--config", cfg.string(), "--out", (dir / "nowhere").string()}, &log) == kExitUsage);
  CHECK(log.find("simulate") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(cli({"train", "--config", (dir / "broken.json").string()}) == kExitUsage);

  // a fleet directory whose manifest points at a missing file
  const fs::path out = dir / "run";
  REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", out.string()}) == kExitOk);
  fs::remove(out / "fleet" / "traj_0000.csv");
  CHECK(cli({"train", "--config", cfg.string(), "--out", out.string()}, &log) == kExitData);
}

TEST_CASE("simulate, train and evaluate are reproducible") {
  const fs::path dir = fresh_dir("determinism");
  const fs::path cfg = write_config(dir, tiny_config());
  for (const char* run : {"a", "b"}) {
    const std::string out = (dir / run).string();
    REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", out}) == kExitOk);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", out, "--seed", "1"}) == kExitOk);
    REQUIRE(cli({"evaluate", "--config", cfg.string(), "--out", out}) == kExitOk);
  }
  CHECK(slurp(dir / "a" / "fleet" / "manifest.json") == slurp(dir / "b" / "fleet" / "manifest.json"));
  CHECK(slurp(dir / "a" / "fleet" / "traj_0002.csv") == slurp(dir / "b" / "fleet" / "traj_0002.csv"));
  for (const char* f : {"kidm_seed0.json", "kidm_seed1.json", "kidm_summary.json"})
    CHECK(slurp(dir / "a" / "metrics" / f) == slurp(dir / "b" / "metrics" / f));
  CHECK(slurp(dir / "a" / "models" / "kidm_seed1.json") == slurp(dir / "b" / "models" / "kidm_seed1.json"));

  const json summary = json::parse(slurp(dir / "a" / "metrics" / "kidm_summary.json"));
  CHECK(summary.at("per_seed").size() == 2);
  CHECK(summary.at("supervision_trajectories") == 1);
  const json model = json::parse(slurp(dir / "a" / "models" / "kidm_seed0.json"));
  CHECK(model.contains("rul_estimator"));
  CHECK(fs::exists(dir / "a" / "curves" / "kidm_seed0"));
  const std::string curve = slurp(*fs::directory_iterator(dir / "a" / "curves" / "kidm_seed0"));
  CHECK(curve.rfind("time_s,rul_true,rul_pred,rul_pred_smoothed\n", 0) == 0);

  // a different data seed gives a different fleet
  const std::string c = (dir / "c").string();
  REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", c, "--seed", "9"}) == kExitOk);
  CHECK(slurp(dir / "a" / "fleet" / "traj_0002.csv") != slurp(dir / "c" / "fleet" / "traj_0002.csv"));
}

TEST_CASE("loaded fleets match the simulated ones") {
  const fs::path dir = fresh_dir("fleet");
  const ExperimentConfig c = tiny_config();
  std::vector<battery::Trajectory> runs;
  const Fleet f = simulate_fleet(c.profile, c.split, c.data_seed, &runs);
  write_fleet(dir, f, runs, true);
  const Fleet back = load_fleet(dir);
  CHECK(back.split.train == f.split.train);
  CHECK(back.split.test == f.split.test);
  CHECK(back.split.supervision == f.split.supervision);
  REQUIRE(back.series.size() == f.series.size());
  for (std::size_t i = 0; i < f.series.size(); ++i) {
    CHECK(back.series[i].time == f.series[i].time);
    for (const char* ch : {"voltage_v", "temperature_k", "current_a"})
      CHECK(back.series[i].channel(ch) == f.series[i].channel(ch));
    CHECK(back.series[i].eol_time == f.series[i].eol_time);
  }
}

TEST_CASE("studies write their tables") {
  const fs::path dir = fresh_dir("studies");
  ExperimentConfig c = tiny_config();
  c.seeds = {0};
  c.study.noise_models = {models::ModelKind::dko};
  c.study.compare_models = {models::ModelKind::kidm, models::ModelKind::ae};
  const fs::path cfg = write_config(dir, c);
  const std::string out = (dir / "run").string();
  REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", out}) == kExitOk);
  std::string log;
  for (const char* name : {"noise", "early", "extrapolate", "spectrum"}) {
    INFO(name);
    CHECK(cli({"study", name, "--config", cfg.string(), "--out", out}, &log) == kExitOk);
    INFO(log);
    CHECK(fs::exists(fs::path(out) / (std::string("study_") + name)));
  }
  const std::string spectra = slurp(fs::path(out) / "study_spectrum" / "spectra.csv");
  CHECK(spectra.rfind("interval_label,sample_id,re,im\n", 0) == 0);
}
