#include "kprog/experiment/config.hpp"

#include <fstream>
#include <set>

#include "kprog/battery/io.hpp"

namespace kprog::experiment {

using nlohmann::json;

namespace {

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

json range_json(const battery::CurrentRange& r) { return json::array({r.low, r.high}); }

battery::CurrentRange range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("current range must be [low, high]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<models::ModelKind> kinds_from(const json& j) {
  std::vector<models::ModelKind> out;
  for (const auto& k : j) out.push_back(models::model_kind_from_string(k.get<std::string>()));
  return out;
}

json kinds_json(const std::vector<models::ModelKind>& kinds) {
  json out = json::array();
  for (auto k : kinds) out.push_back(models::to_string(k));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (format_version != kConfigFormatVersion)
    throw ConfigError("format_version " + std::to_string(format_version) + " is not supported (expected " +
                      std::to_string(kConfigFormatVersion) + ")");
  try {
    profile.validate();
    split.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (window_size == 0) throw ConfigError("window_size must be positive");
  if (observable_dim == 0) throw ConfigError("observable_dim must be positive");
  if (network.hidden_layers == 0 || network.hidden_width == 0) throw ConfigError("network must have hidden units");
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
  if (!(smoothing_sigma >= 0.0)) throw ConfigError("smoothing_sigma must be >= 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(study.early_fraction > 0.0 && study.early_fraction <= 1.0))
    throw ConfigError("study.early_fraction must be in (0, 1]");
  for (double s : study.noise_sigmas)
    if (!(s >= 0.0)) throw ConfigError("study.noise_sigmas must be >= 0");
}

ExperimentConfig default_config(battery::LoadMode mode) {
  ExperimentConfig c;
  if (mode == battery::LoadMode::constant) {
    c.profile = battery::LoadProfile::constant_load(1.0);
    c.split = {70, 30, 1};
    c.model = models::ModelKind::dko;
  } else {
    c.profile = battery::LoadProfile::varying_load();
    c.split = {100, 100, 1};
    c.model = models::ModelKind::kidm;
  }
  return c;
}

ExperimentConfig config_from_json(const json& doc) {
  try {
    check_keys(doc,
               {"format_version", "profile", "split", "data_seed", "noise_sigma", "model", "window_size",
                "observable_dim", "network", "train", "ridge", "smoothing_sigma", "seeds", "data_dir", "out_dir",
                "study"},
               "config");
    if (!doc.contains("format_version")) throw ConfigError("config: format_version is required");
    battery::LoadMode mode = battery::LoadMode::varying;
    if (doc.contains("profile"))
      mode = battery::load_mode_from_string(doc["profile"].value("mode", std::string("constant")));
    ExperimentConfig c = default_config(mode);
    read(doc, "format_version", c.format_version);
    if (doc.contains("profile")) c.profile = battery::load_profile_from_json(doc["profile"]);
    if (doc.contains("split")) {
      const json& s = doc["split"];
      check_keys(s, {"train_count", "test_count", "rul_supervision_count"}, "split");
      read(s, "train_count", c.split.train_count);
      read(s, "test_count", c.split.test_count);
      read(s, "rul_supervision_count", c.split.rul_supervision_count);
    }
    read(doc, "data_seed", c.data_seed);
    read(doc, "noise_sigma", c.noise_sigma);
    if (doc.contains("model")) c.model = models::model_kind_from_string(doc["model"].get<std::string>());
    read(doc, "window_size", c.window_size);
    read(doc, "observable_dim", c.observable_dim);
    if (doc.contains("network")) {
      const json& n = doc["network"];
      check_keys(n, {"hidden_layers", "hidden_width"}, "network");
      read(n, "hidden_layers", c.network.hidden_layers);
      read(n, "hidden_width", c.network.hidden_width);
    }
    if (doc.contains("train")) {
      const json& t = doc["train"];
      check_keys(t, {"epochs", "batch_size", "horizon", "learning_rate", "weight_decay", "max_batches_per_epoch"},
                 "train");
      read(t, "epochs", c.train.epochs);
      read(t, "batch_size", c.train.batch_size);
      read(t, "horizon", c.train.horizon);
      read(t, "learning_rate", c.train.learning_rate);
      read(t, "weight_decay", c.train.weight_decay);
      read(t, "max_batches_per_epoch", c.train.max_batches_per_epoch);
    }
    read(doc, "ridge", c.ridge);
    read(doc, "smoothing_sigma", c.smoothing_sigma);
    read(doc, "seeds", c.seeds);
    read(doc, "data_dir", c.data_dir);
    read(doc, "out_dir", c.out_dir);
    if (doc.contains("study")) {
      const json& s = doc["study"];
      check_keys(s,
                 {"noise_sigmas", "noise_models", "compare_models", "early_fraction", "extrapolation_train",
                  "extrapolation_test", "spectrum_intervals", "spectrum_trajectories", "spectrum_samples"},
                 "study");
      read(s, "noise_sigmas", c.study.noise_sigmas);
      if (s.contains("noise_models")) c.study.noise_models = kinds_from(s["noise_models"]);
      if (s.contains("compare_models")) c.study.compare_models = kinds_from(s["compare_models"]);
      read(s, "early_fraction", c.study.early_fraction);
      if (s.contains("extrapolation_train")) c.study.extrapolation_train = range_from(s["extrapolation_train"]);
      if (s.contains("extrapolation_test")) {
        c.study.extrapolation_test.clear();
        for (const auto& r : s["extrapolation_test"]) c.study.extrapolation_test.push_back(range_from(r));
      }
      if (s.contains("spectrum_intervals")) {
        c.study.spectrum_intervals.clear();
        for (const auto& r : s["spectrum_intervals"]) c.study.spectrum_intervals.push_back(range_from(r));
      }
      read(s, "spectrum_trajectories", c.study.spectrum_trajectories);
      read(s, "spectrum_samples", c.study.spectrum_samples);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json to_json(const data::SplitSpec& s) {
  return {{"train_count", s.train_count}, {"test_count", s.test_count},
          {"rul_supervision_count", s.rul_supervision_count}};
}

json to_json(const models::TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"horizon", t.horizon},
          {"learning_rate", t.learning_rate},
          {"weight_decay", t.weight_decay},
          {"max_batches_per_epoch", t.max_batches_per_epoch}};
}

json to_json(const models::NetworkShape& n) {
  return {{"hidden_layers", n.hidden_layers}, {"hidden_width", n.hidden_width}};
}

json to_json(const ExperimentConfig& c) {
  json extrap = json::array();
  for (const auto& r : c.study.extrapolation_test) extrap.push_back(range_json(r));
  json intervals = json::array();
  for (const auto& r : c.study.spectrum_intervals) intervals.push_back(range_json(r));
  return {{"format_version", c.format_version},
          {"profile", battery::to_json(c.profile)},
          {"split", to_json(c.split)},
          {"data_seed", c.data_seed},
          {"noise_sigma", c.noise_sigma},
          {"model", models::to_string(c.model)},
          {"window_size", c.window_size},
          {"observable_dim", c.observable_dim},
          {"network", to_json(c.network)},
          {"train", to_json(c.train)},
          {"ridge", c.ridge},
          {"smoothing_sigma", c.smoothing_sigma},
          {"seeds", c.seeds},
          {"data_dir", c.data_dir},
          {"out_dir", c.out_dir},
          {"study",
           {{"noise_sigmas", c.study.noise_sigmas},
            {"noise_models", kinds_json(c.study.noise_models)},
            {"compare_models", kinds_json(c.study.compare_models)},
            {"early_fraction", c.study.early_fraction},
            {"extrapolation_train", range_json(c.study.extrapolation_train)},
            {"extrapolation_test", extrap},
            {"spectrum_intervals", intervals},
            {"spectrum_trajectories", c.study.spectrum_trajectories},
            {"spectrum_samples", c.study.spectrum_samples}}}};
}

}  // namespace kprog::experiment
