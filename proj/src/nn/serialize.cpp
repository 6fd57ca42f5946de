#include "kprog/nn/serialize.hpp"

#include <stdexcept>

namespace kprog::nn {

using nlohmann::json;

json to_json(const Mlp& model) {
  json layers = json::array();
  for (const Layer& l : model.layers()) {
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weights", std::vector<double>(l.weight.values().begin(), l.weight.values().end())},
                      {"bias", l.bias}});
  }
  return {{"format_version", kModelFormatVersion}, {"layers", layers}, {"activation", "selu"}};
}

Mlp mlp_from_json(const json& doc) {
  if (doc.value("format_version", 0) != kModelFormatVersion)
    throw std::runtime_error("unsupported network format_version");
  if (doc.value("activation", std::string{}) != "selu")
    throw std::runtime_error("unsupported activation '" + doc.value("activation", std::string{}) + "'");
  std::vector<Layer> layers;
  for (const json& l : doc.at("layers")) {
    const auto rows = l.at("rows").get<std::size_t>();
    const auto cols = l.at("cols").get<std::size_t>();
    layers.push_back({Matrix(rows, cols, l.at("weights").get<std::vector<double>>()),
                      l.at("bias").get<std::vector<double>>()});
  }
  return Mlp(std::move(layers));
}

json to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from_json(const json& doc) {
  return Matrix(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>(),
                doc.at("data").get<std::vector<double>>());
}

}  // namespace kprog::nn
