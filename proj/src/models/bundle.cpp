#include "kprog/models/bundle.hpp"

#include <stdexcept>
#include <type_traits>

#include "kprog/nn/serialize.hpp"

namespace kprog::models {

using nlohmann::json;
using nn::Matrix;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::dko: return "dko";
    case ModelKind::ae: return "ae";
    case ModelKind::kidm: return "kidm";
    case ModelKind::kidmae: return "kidmae";
    case ModelKind::fnn: return "fnn";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : {ModelKind::dko, ModelKind::ae, ModelKind::kidm, ModelKind::kidmae, ModelKind::fnn})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown model kind '" + name + "' (expected dko, ae, kidm, kidmae or fnn)");
}

bool is_controlled(ModelKind kind) { return kind == ModelKind::kidm || kind == ModelKind::kidmae; }

Objective objective_for(ModelKind kind) {
  return kind == ModelKind::dko || kind == ModelKind::kidm ? Objective::full : Objective::reconstruction_only;
}

data::WindowLayout battery_layout_for(ModelKind kind, std::size_t window_size) {
  return is_controlled(kind) ? data::WindowLayout::battery_controlled(window_size)
                             : data::WindowLayout::battery_state(window_size);
}

std::size_t ModelBundle::observable_dim() const {
  if (const auto* m = std::get_if<DkoModel>(&model)) return m->observable_dim();
  if (const auto* m = std::get_if<KidmModel>(&model)) return m->observable_dim();
  return 0;
}

std::size_t ModelBundle::horizon() const {
  if (const auto* m = std::get_if<DkoModel>(&model)) return m->horizon;
  if (const auto* m = std::get_if<KidmModel>(&model)) return m->horizon;
  return 0;
}

namespace {

constexpr std::size_t kEncodeChunk = 2048;

template <typename F>
Matrix chunked(const data::WindowTable& table, std::size_t out_cols, F&& apply) {
  Matrix out(table.size(), out_cols);
  for (std::size_t begin = 0; begin < table.size(); begin += kEncodeChunk) {
    const std::size_t n = std::min(kEncodeChunk, table.size() - begin);
    const Matrix part = apply(slice_rows(table.x, begin, n), slice_rows(table.u, begin, n));
    std::copy(part.data(), part.data() + part.size(), out.data() + begin * out_cols);
  }
  return out;
}

}  // namespace

Matrix ModelBundle::encode(const data::WindowTable& table) const {
  if (const auto* m = std::get_if<DkoModel>(&model))
    return chunked(table, m->observable_dim(), [&](const Matrix& x, const Matrix&) { return m->encode(x); });
  if (const auto* m = std::get_if<KidmModel>(&model))
    return chunked(table, m->observable_dim(), [&](const Matrix& x, const Matrix& u) { return m->encode(x, u); });
  throw std::logic_error("fnn models have no observables");
}

std::vector<double> ModelBundle::predict(const data::WindowTable& table) const {
  const auto* m = std::get_if<FnnModel>(&model);
  if (!m) throw std::logic_error("direct prediction is only defined for fnn models");
  const Matrix out = chunked(table, 1, [&](const Matrix& x, const Matrix& u) {
    return m->network.forward(u.cols() > 0 ? hconcat(x, u) : x);
  });
  return {out.values().begin(), out.values().end()};
}

ModelBundle make_bundle(ModelKind kind, const data::WindowLayout& layout, const data::Standardizer& normalization,
                        std::size_t observable_dim, std::size_t horizon, const NetworkShape& shape,
                        std::uint64_t seed) {
  ModelBundle b;
  b.kind = kind;
  b.layout = layout;
  b.normalization = normalization;
  const std::size_t nx = layout.state_dim();
  const std::size_t nu = layout.control_dim();
  switch (kind) {
    case ModelKind::dko:
    case ModelKind::ae:
      if (nu != 0) throw std::invalid_argument(to_string(kind) + " takes no control channels");
      b.model = DkoModel(nx, observable_dim, horizon, shape, seed);
      break;
    case ModelKind::kidm:
    case ModelKind::kidmae:
      if (nu == 0) throw std::invalid_argument(to_string(kind) + " needs control channels");
      b.model = KidmModel(nx, nu, observable_dim, horizon, shape, seed);
      break;
    case ModelKind::fnn:
      b.model = FnnModel(nx + nu, shape, seed);
      break;
  }
  return b;
}

TrainHistory train_bundle(ModelBundle& bundle, const data::WindowTable& train_windows,
                          const data::WindowTable& supervision_windows, const TrainConfig& config) {
  const Objective objective = objective_for(bundle.kind);
  return std::visit(
      [&](auto& m) -> TrainHistory {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FnnModel>) {
          return train(m, supervision_windows, config, Objective::reconstruction_only);
        } else {
          return train(m, train_windows, config, objective);
        }
      },
      bundle.model);
}

json to_json(const ModelBundle& b) {
  json networks = json::object();
  json doc = {{"kind", to_string(b.kind)},
              {"observable_dim", b.observable_dim()},
              {"horizon", b.horizon()},
              {"normalization", to_json(b.normalization)},
              {"layout", to_json(b.layout)}};
  if (const auto* m = std::get_if<DkoModel>(&b.model)) {
    networks["encoder"] = nn::to_json(m->encoder);
    networks["decoder"] = nn::to_json(m->decoder);
    if (b.kind == ModelKind::dko) doc["koopman"] = nn::to_json(m->koopman);
  } else if (const auto* m = std::get_if<KidmModel>(&b.model)) {
    networks["encoder"] = nn::to_json(m->encoder);
    networks["decoder"] = nn::to_json(m->decoder);
    networks["control_operator"] = nn::to_json(m->control_operator);
  } else {
    networks["regressor"] = nn::to_json(std::get<FnnModel>(b.model).network);
  }
  doc["networks"] = networks;
  return doc;
}

ModelBundle bundle_from_json(const json& doc) {
  ModelBundle b;
  b.kind = model_kind_from_string(doc.at("kind").get<std::string>());
  b.layout = data::window_layout_from_json(doc.at("layout"));
  b.normalization = data::standardizer_from_json(doc.at("normalization"));
  const std::size_t horizon = doc.value("horizon", std::size_t{0});
  const json& nets = doc.at("networks");
  switch (b.kind) {
    case ModelKind::dko:
    case ModelKind::ae: {
      // The autoencoder ablation never trains its operator; it stays the identity.
      const std::size_t d = doc.at("observable_dim").get<std::size_t>();
      const Matrix k = b.kind == ModelKind::dko ? nn::matrix_from_json(doc.at("koopman")) : Matrix::identity(d);
      b.model = DkoModel(nn::mlp_from_json(nets.at("encoder")), nn::mlp_from_json(nets.at("decoder")), k, horizon);
      break;
    }
    case ModelKind::kidm:
    case ModelKind::kidmae:
      b.model = KidmModel(nn::mlp_from_json(nets.at("encoder")), nn::mlp_from_json(nets.at("decoder")),
                          nn::mlp_from_json(nets.at("control_operator")), horizon);
      break;
    case ModelKind::fnn:
      b.model = FnnModel(nn::mlp_from_json(nets.at("regressor")));
      break;
  }
  return b;
}

json to_json(const TrainHistory& h) {
  json out = json::array();
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const LossTerms& l = h.epochs[e];
    out.push_back({{"epoch", e}, {"rec", l.rec}, {"lin", l.lin}, {"pred", l.pred},
                   {"regression", l.regression}, {"total", l.total}});
  }
  return out;
}

}  // namespace kprog::models
