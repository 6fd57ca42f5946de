#include "kprog/experiment/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "kprog/battery/io.hpp"
#include "kprog/core/rng.hpp"
#include "kprog/experiment/config.hpp"
#include "kprog/experiment/pipeline.hpp"

namespace kprog::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  bool include_hidden = false;
  std::string study;
};

void write_json(const fs::path& path, const json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Runner {
 public:
  Runner(const Options& opt, std::ostream& log) : opt_(opt), log_(log) {
    if (opt.config_path.empty()) throw ConfigError("--config is required");
    config_ = load_config(opt.config_path);
    if (!opt.out.empty()) config_.out_dir = opt.out;
    out_ = config_.out_dir;
    fleet_dir_ = config_.data_dir.empty() ? out_ / "fleet" : fs::path(config_.data_dir);
  }

  void simulate() {
    if (opt_.seed) config_.data_seed = *opt_.seed;
    std::vector<battery::Trajectory> runs;
    log_ << "simulating " << config_.split.train_count + config_.split.test_count << " "
         << battery::to_string(config_.profile.mode) << "-load trajectories\n";
    const Fleet fleet = simulate_fleet(config_.profile, config_.split, config_.data_seed, &runs);
    write_fleet(fleet_dir_, fleet, runs, opt_.include_hidden);
    write_json(out_ / "config.json", to_json(config_));
    log_ << "fleet written to " << fleet_dir_.string() << "\n";
  }

  void train() {
    const std::uint64_t seed = opt_.seed.value_or(config_.seeds.front());
    load_data();
    const Tables tables = make_tables(prepared_, config_.model, config_.window_size);
    train_and_save(tables, config_.model, seed);
  }

  void evaluate() {
    load_data();
    const Tables tables = make_tables(prepared_, config_.model, config_.window_size);
    std::vector<rul::MetricReport> reports;
    json runs = json::array();
    for (std::uint64_t seed : seed_list()) {
      const ModelRun run = load_or_train(tables, config_.model, seed);
      const rul::Evaluation ev = evaluate_run(run, tables.test, config_);
      const std::string tag = models::to_string(config_.model) + "_seed" + std::to_string(seed);
      json report = report_json(config_.model, ev.report, seed);
      report["supervision_trajectories"] = config_.split.rul_supervision_count;
      write_json(out_ / "metrics" / (tag + ".json"), report);
      for (const auto& curve : ev.curves) {
        const fs::path dir = out_ / "curves" / tag;
        fs::create_directories(dir);
        rul::write_curve_csv(dir / ("test_" + std::to_string(curve.trajectory) + ".csv"), curve);
      }
      log_ << tag << ": mse " << ev.report.mse << " mae " << ev.report.mae << " mape " << ev.report.mape << "\n";
      reports.push_back(ev.report);
      runs.push_back(report);
    }
    json summary = summarize(reports);
    summary["model"] = models::to_string(config_.model);
    summary["supervision_trajectories"] = config_.split.rul_supervision_count;
    summary["seeds"] = seed_list();
    summary["per_seed"] = runs;
    write_json(out_ / "metrics" / (models::to_string(config_.model) + "_summary.json"), summary);
  }

  void study(const std::string& name) {
    if (name == "noise") noise_study();
    else if (name == "early") early_study();
    else if (name == "extrapolate") extrapolation_study();
    else if (name == "spectrum") spectrum_study();
    else throw ConfigError("unknown study '" + name + "'");
  }

 private:
  std::vector<std::uint64_t> seed_list() const {
    if (opt_.seed) return {*opt_.seed};
    if (!opt_.seeds) return config_.seeds;
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < *opt_.seeds; ++i)
      out.push_back(i < config_.seeds.size() ? config_.seeds[i] : static_cast<std::uint64_t>(i));
    return out;
  }

  void load_data() {
    if (!fs::is_directory(fleet_dir_))
      throw ConfigError("data directory '" + fleet_dir_.string() + "' does not exist (run simulate first)");
    fleet_ = load_fleet(fleet_dir_);
    prepared_ = prepare(fleet_, config_.noise_sigma, derive_seed(config_.data_seed, kNoiseStream));
  }

  fs::path model_path(models::ModelKind kind, std::uint64_t seed) const {
    return out_ / "models" / (models::to_string(kind) + "_seed" + std::to_string(seed) + ".json");
  }

  ModelRun train_and_save(const Tables& tables, models::ModelKind kind, std::uint64_t seed) {
    log_ << "training " << models::to_string(kind) << " seed " << seed << " on " << tables.train.size()
         << " windows\n";
    const auto t0 = std::chrono::steady_clock::now();
    ModelRun run = train_run(tables, prepared_.normalization, config_, kind, seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path path = model_path(kind, seed);
    json bundle = models::to_json(run.bundle);
    if (run.estimator) bundle["rul_estimator"] = rul::to_json(*run.estimator);
    write_json(path, bundle);
    std::string csv = "epoch,rec,lin,pred,regression,total\n";
    for (std::size_t e = 0; e < run.history.epochs.size(); ++e) {
      const auto& l = run.history.epochs[e];
      csv += std::to_string(e) + "," + fmt(l.rec) + "," + fmt(l.lin) + "," + fmt(l.pred) + "," + fmt(l.regression) +
             "," + fmt(l.total) + "\n";
    }
    write_text(path.parent_path() / (path.stem().string() + "_loss.csv"), csv);
    log_ << "  done in " << secs << " s, final loss "
         << (run.history.epochs.empty() ? 0.0 : run.history.epochs.back().total) << "\n";
    return run;
  }

  ModelRun load_or_train(const Tables& tables, models::ModelKind kind, std::uint64_t seed) {
    const fs::path path = model_path(kind, seed);
    if (!fs::exists(path)) return train_and_save(tables, kind, seed);
    std::ifstream in(path);
    json doc;
    try {
      doc = json::parse(in);
      ModelRun run;
      run.bundle = models::bundle_from_json(doc);
      if (doc.contains("rul_estimator")) run.estimator = rul::rul_estimator_from_json(doc["rul_estimator"]);
      if (run.bundle.kind != kind) throw data::DataError("model file " + path.string() + " holds a different kind");
      log_ << "loaded " << path.string() << "\n";
      return run;
    } catch (const json::exception& e) {
      throw data::DataError("malformed model file " + path.string() + ": " + e.what());
    }
  }

  void noise_study() {
    const fs::path dir = out_ / "study_noise";
    const Fleet fleet = simulate_fleet(config_.profile, config_.split, config_.data_seed);
    std::string csv = "sigma,model,seed,mse,mae,mape\n";
    json summary = json::array();
    for (double sigma : config_.study.noise_sigmas) {
      prepared_ = prepare(fleet, sigma, derive_seed(config_.data_seed, kNoiseStream));
      for (models::ModelKind kind : config_.study.noise_models) {
        const Tables tables = make_tables(prepared_, kind, config_.window_size);
        std::vector<rul::MetricReport> reports;
        for (std::uint64_t seed : seed_list()) {
          log_ << "noise " << sigma << " " << models::to_string(kind) << " seed " << seed << "\n";
          const ModelRun run = train_run(tables, prepared_.normalization, config_, kind, seed);
          const auto ev = evaluate_run(run, tables.test, config_);
          csv += fmt(sigma) + "," + models::to_string(kind) + "," + std::to_string(seed) + "," + fmt(ev.report.mse) +
                 "," + fmt(ev.report.mae) + "," + fmt(ev.report.mape) + "\n";
          reports.push_back(ev.report);
        }
        json s = summarize(reports);
        s["sigma"] = sigma;
        s["model"] = models::to_string(kind);
        summary.push_back(s);
      }
    }
    write_text(dir / "noise.csv", csv);
    write_json(dir / "noise_summary.json", {{"config", to_json(config_)}, {"results", summary}});
  }

  void early_study() {
    const fs::path dir = out_ / "study_early";
    const Fleet fleet = simulate_fleet(config_.profile, config_.split, config_.data_seed);
    prepared_ = prepare(fleet, config_.noise_sigma, derive_seed(config_.data_seed, kNoiseStream));
    std::string csv = "model,seed,fraction,mse,mae,mape\n";
    json summary = json::array();
    for (models::ModelKind kind : config_.study.compare_models) {
      const Tables tables = make_tables(prepared_, kind, config_.window_size);
      std::vector<rul::MetricReport> reports;
      for (std::uint64_t seed : seed_list()) {
        log_ << "early " << models::to_string(kind) << " seed " << seed << "\n";
        const ModelRun run = train_run(tables, prepared_.normalization, config_, kind, seed);
        const auto ev = rul::early_lifetime_protocol(run.bundle, tables.supervision, tables.test,
                                                     config_.study.early_fraction, config_.ridge,
                                                     config_.smoothing_sigma);
        csv += models::to_string(kind) + "," + std::to_string(seed) + "," + fmt(config_.study.early_fraction) + "," +
               fmt(ev.report.mse) + "," + fmt(ev.report.mae) + "," + fmt(ev.report.mape) + "\n";
        reports.push_back(ev.report);
      }
      json s = summarize(reports);
      s["model"] = models::to_string(kind);
      s["fraction"] = config_.study.early_fraction;
      summary.push_back(s);
    }
    write_text(dir / "early.csv", csv);
    write_json(dir / "early_summary.json", {{"config", to_json(config_)}, {"results", summary}});
  }

  void extrapolation_study() {
    const fs::path dir = out_ / "study_extrapolate";
    battery::LoadProfile train_profile = config_.profile;
    train_profile.discharge_current_range = config_.study.extrapolation_train;
    const Fleet fleet = simulate_fleet(train_profile, config_.split, config_.data_seed);
    prepared_ = prepare(fleet, config_.noise_sigma, derive_seed(config_.data_seed, kNoiseStream));

    std::vector<std::vector<data::TimeSeries>> test_sets;
    for (std::size_t k = 0; k < config_.study.extrapolation_test.size(); ++k) {
      battery::LoadProfile p = train_profile;
      p.discharge_current_range = config_.study.extrapolation_test[k];
      auto series = simulate_series(p, config_.split.test_count,
                                    derive_seed(config_.data_seed, kExtrapolationStream, k), "extrapolate");
      add_measurement_noise(series, config_.noise_sigma, derive_seed(config_.data_seed, kNoiseStream, k + 1));
      test_sets.push_back(std::move(series));
    }

    std::string csv = "model,seed,interval,mse,mae,mape\n";
    json summary = json::array();
    for (models::ModelKind kind : config_.study.compare_models) {
      const Tables tables = make_tables(prepared_, kind, config_.window_size);
      std::vector<data::WindowTable> tests;
      for (const auto& s : test_sets) tests.push_back(data::build_table(s, tables.layout, &prepared_.normalization));
      std::vector<std::vector<rul::MetricReport>> reports(tests.size());
      for (std::uint64_t seed : seed_list()) {
        log_ << "extrapolate " << models::to_string(kind) << " seed " << seed << "\n";
        const ModelRun run = train_run(tables, prepared_.normalization, config_, kind, seed);
        for (std::size_t k = 0; k < tests.size(); ++k) {
          const auto ev = evaluate_run(run, tests[k], config_);
          csv += models::to_string(kind) + "," + std::to_string(seed) + "," +
                 range_label(config_.study.extrapolation_test[k]) + "," + fmt(ev.report.mse) + "," +
                 fmt(ev.report.mae) + "," + fmt(ev.report.mape) + "\n";
          reports[k].push_back(ev.report);
        }
      }
      for (std::size_t k = 0; k < tests.size(); ++k) {
        json s = summarize(reports[k]);
        s["model"] = models::to_string(kind);
        s["interval"] = range_label(config_.study.extrapolation_test[k]);
        summary.push_back(s);
      }
    }
    write_text(dir / "extrapolate.csv", csv);
    write_json(dir / "extrapolate_summary.json", {{"config", to_json(config_)}, {"results", summary}});
  }

  void spectrum_study() {
    const fs::path dir = out_ / "study_spectrum";
    const Fleet fleet = simulate_fleet(config_.profile, config_.split, config_.data_seed);
    prepared_ = prepare(fleet, config_.noise_sigma, derive_seed(config_.data_seed, kNoiseStream));
    const Tables tables = make_tables(prepared_, models::ModelKind::kidm, config_.window_size);
    const std::uint64_t seed = seed_list().front();
    log_ << "spectrum: training kidm seed " << seed << "\n";
    const ModelRun run = train_run(tables, prepared_.normalization, config_, models::ModelKind::kidm, seed);
    const auto sets = control_sets(config_, prepared_.normalization, tables.layout);
    const auto sweep = spectral::spectrum_sweep(std::get<models::KidmModel>(run.bundle.model), sets);
    fs::create_directories(dir);
    spectral::write_spectra_csv(dir / "spectra.csv", sweep.spectra);
    json doc = to_json(sweep);
    doc["seed"] = seed;
    doc["config"] = to_json(config_);
    write_json(dir / "spectrum_summary.json", doc);
  }

  Options opt_;
  std::ostream& log_;
  ExperimentConfig config_;
  fs::path out_;
  fs::path fleet_dir_;
  Fleet fleet_;
  Prepared prepared_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Koopman degradation models and RUL estimation"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  std::size_t seeds = 0;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", opt.out, "output directory (overrides out_dir)");
  };
  CLI::App* sim = app.add_subcommand("simulate", "simulate a run-to-failure fleet");
  common(sim);
  sim->add_option("--seed", seed, "data seed (overrides data_seed)");
  sim->add_flag("--include-hidden", opt.include_hidden, "also write q_max, r0_ohm, d and rul_norm columns");

  CLI::App* train = app.add_subcommand("train", "train one model");
  common(train);
  train->add_option("--seed", seed, "model seed");

  CLI::App* eval = app.add_subcommand("evaluate", "train (if needed) and score models over seeds");
  common(eval);
  eval->add_option("--seed", seed, "evaluate this single seed");
  eval->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);

  CLI::App* study = app.add_subcommand("study", "run a study");
  common(study);
  study->add_option("name", opt.study, "noise | early | extrapolate | spectrum")
      ->required()
      ->check(CLI::IsMember({"noise", "early", "extrapolate", "spectrum"}));
  study->add_option("--seed", seed, "single model seed");
  study->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    log << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  auto given = [](CLI::App* cmd, const char* name) { return cmd->count(name) > 0; };

  try {
    if (sim->parsed()) {
      if (given(sim, "--seed")) opt.seed = seed;
      Runner(opt, log).simulate();
    } else if (train->parsed()) {
      if (given(train, "--seed")) opt.seed = seed;
      Runner(opt, log).train();
    } else if (eval->parsed()) {
      if (given(eval, "--seed")) opt.seed = seed;
      if (given(eval, "--seeds")) opt.seeds = seeds;
      Runner(opt, log).evaluate();
    } else if (study->parsed()) {
      if (given(study, "--seed")) opt.seed = seed;
      if (given(study, "--seeds")) opt.seeds = seeds;
      Runner(opt, log).study(opt.study);
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const data::DataError& e) {
    log << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const models::TrainingDivergedError& e) {
    log << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace kprog::experiment
