#pragma once

#include "json.hpp"
#include "kprog/nn/matrix.hpp"
#include "kprog/nn/mlp.hpp"

namespace kprog::nn {

inline constexpr int kModelFormatVersion = 1;

// {"format_version": 1, "layers": [{"rows", "cols", "weights", "bias"}, ...],
//  "activation": "selu"}; weights row-major.
nlohmann::json to_json(const Mlp& model);
Mlp mlp_from_json(const nlohmann::json& doc);

// {"rows", "cols", "data"} row-major.
nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc);

}  // namespace kprog::nn
