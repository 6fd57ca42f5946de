#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kprog/core/rng.hpp"
#include "kprog/nn/matrix.hpp"

namespace kprog::nn {

// SELU constants.
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;

inline double selu(double x) {
  return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
}

inline double selu_derivative(double x) {
  return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
}

struct Layer {
  Matrix weight;             // output_dim x input_dim
  std::vector<double> bias;  // output_dim
};

class StaleTapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Intermediates cached by a forward pass; one row per batch element.
struct Tape {
  std::uint64_t model_id = 0;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> pre_activations; // affine output of each layer
};

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void add(const MlpGradient& other);
  std::vector<std::span<const double>> views() const;
};

struct MlpBackward {
  MlpGradient parameters;
  Matrix input;  // d loss / d input, same shape as the forward batch
};

// Feed-forward network: SELU after every hidden layer, identity output.
class Mlp {
 public:
  Mlp() = default;
  // dims = {input, hidden..., output}; LeCun-normal weights, zero biases.
  Mlp(std::span<const std::size_t> dims, Rng& rng);
  explicit Mlp(std::vector<Layer> layers);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;
  const std::vector<Layer>& layers() const { return layers_; }

  // Mutable access; invalidates every tape recorded before the call.
  std::vector<std::span<double>> parameters();
  Layer& mutable_layer(std::size_t index);

  std::vector<double> forward(std::span<const double> input) const;
  Matrix forward(const Matrix& batch) const;
  Matrix forward(const Matrix& batch, Tape& tape) const;

  // Reverse-mode pass for a scalar loss whose gradient w.r.t. the forward
  // output is output_grad.
  MlpBackward gradient(const Tape& tape, const Matrix& output_grad) const;

  MlpGradient zero_gradient() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void validate() const;

  std::vector<Layer> layers_;
  std::uint64_t id_ = next_id();
  std::uint64_t version_ = 0;

  static std::uint64_t next_id();
};

bool operator==(const Layer& a, const Layer& b);

}  // namespace kprog::nn
