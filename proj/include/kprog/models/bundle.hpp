#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "kprog/data/windows.hpp"
#include "kprog/models/koopman.hpp"
#include "kprog/models/training.hpp"

namespace kprog::models {

enum class ModelKind { dko, ae, kidm, kidmae, fnn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// kidm and kidmae take the current as a control input; the others see it as
// part of the state.
bool is_controlled(ModelKind kind);
Objective objective_for(ModelKind kind);
data::WindowLayout battery_layout_for(ModelKind kind, std::size_t window_size = 100);

// A model together with everything needed to apply it to raw series.
struct ModelBundle {
  ModelKind kind = ModelKind::dko;
  data::WindowLayout layout;
  data::Standardizer normalization;
  std::variant<DkoModel, KidmModel, FnnModel> model;

  std::size_t observable_dim() const;
  std::size_t horizon() const;

  // Observables for every row of the table (not available for fnn).
  nn::Matrix encode(const data::WindowTable& table) const;
  // Direct RUL predictions (fnn only).
  std::vector<double> predict(const data::WindowTable& table) const;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

ModelBundle make_bundle(ModelKind kind, const data::WindowLayout& layout, const data::Standardizer& normalization,
                        std::size_t observable_dim, std::size_t horizon, const NetworkShape& shape,
                        std::uint64_t seed);

// Trains with the objective of the bundle's kind: dko/kidm on the full loss
// over train_windows, ae/kidmae on reconstruction only, fnn by regression on
// supervision_windows.
TrainHistory train_bundle(ModelBundle& bundle, const data::WindowTable& train_windows,
                          const data::WindowTable& supervision_windows, const TrainConfig& config);

// {"kind", "observable_dim", "horizon", "normalization", "layout", "networks", "koopman"}
nlohmann::json to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const TrainHistory& history);

}  // namespace kprog::models
