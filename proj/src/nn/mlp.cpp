#include "kprog/nn/mlp.hpp"

#include <atomic>
#include <cmath>

namespace kprog::nn {

std::uint64_t Mlp::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

bool operator==(const Layer& a, const Layer& b) {
  return a.weight == b.weight && a.bias == b.bias;
}

bool operator==(const Mlp& a, const Mlp& b) { return a.layers_ == b.layers_; }

Mlp::Mlp(std::span<const std::size_t> dims, Rng& rng) {
  require(dims.size() >= 2, "mlp needs at least input and output dimensions");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    require(fan_in > 0 && fan_out > 0, "mlp layer dimensions must be positive");
    Layer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.weight.values()) w = rng.normal(0.0, stddev);
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

Mlp::Mlp(const Mlp& other) : layers_(other.layers_) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    layers_ = other.layers_;
    ++version_;
  }
  return *this;
}

void Mlp::validate() const {
  require(!layers_.empty(), "mlp has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    require(l.bias.size() == l.weight.rows(), "layer " + std::to_string(i) + ": bias length mismatch");
    if (i > 0)
      require(l.weight.cols() == layers_[i - 1].weight.rows(),
              "layer " + std::to_string(i) + ": input does not chain with previous output");
  }
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<std::span<double>> Mlp::parameters() {
  ++version_;
  std::vector<std::span<double>> out;
  out.reserve(2 * layers_.size());
  for (Layer& l : layers_) {
    out.emplace_back(l.weight.values());
    out.emplace_back(l.bias);
  }
  return out;
}

Layer& Mlp::mutable_layer(std::size_t index) {
  ++version_;
  return layers_.at(index);
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Matrix batch(1, input.size(), std::vector<double>(input.begin(), input.end()));
  Matrix out = forward(batch);
  return {out.values().begin(), out.values().end()};
}

namespace {

void add_bias(Matrix& z, const std::vector<double>& bias) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

Matrix activate(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.values()) v = selu(v);
  return a;
}

}  // namespace

Matrix Mlp::forward(const Matrix& batch) const {
  require(!layers_.empty(), "forward on empty mlp");
  require(batch.cols() == input_dim(), "mlp input has " + std::to_string(batch.cols()) +
                                           " columns, expected " + std::to_string(input_dim()));
  Matrix a = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = matmul_transposed(a, layers_[i].weight);
    add_bias(z, layers_[i].bias);
    a = (i + 1 < layers_.size()) ? activate(z) : std::move(z);
  }
  return a;
}

Matrix Mlp::forward(const Matrix& batch, Tape& tape) const {
  require(!layers_.empty(), "forward on empty mlp");
  require(batch.cols() == input_dim(), "mlp input has " + std::to_string(batch.cols()) +
                                           " columns, expected " + std::to_string(input_dim()));
  tape.model_id = id_;
  tape.version = version_;
  tape.inputs.clear();
  tape.pre_activations.clear();
  Matrix a = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = matmul_transposed(a, layers_[i].weight);
    add_bias(z, layers_[i].bias);
    tape.inputs.push_back(std::move(a));
    a = (i + 1 < layers_.size()) ? activate(z) : z;
    tape.pre_activations.push_back(std::move(z));
  }
  return a;
}

MlpBackward Mlp::gradient(const Tape& tape, const Matrix& output_grad) const {
  if (tape.model_id != id_ || tape.version != version_ || tape.inputs.size() != layers_.size())
    throw StaleTapeError("tape was not recorded by the current state of this network");
  const std::size_t batch = tape.inputs.front().rows();
  require(output_grad.rows() == batch && output_grad.cols() == output_dim(),
          "output gradient shape does not match forward output");

  MlpBackward result;
  result.parameters.weights.resize(layers_.size());
  result.parameters.biases.resize(layers_.size());

  Matrix delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      const Matrix& z = tape.pre_activations[i];
      for (std::size_t k = 0; k < delta.size(); ++k) delta.data()[k] *= selu_derivative(z.data()[k]);
    }
    result.parameters.weights[i] = transposed_matmul(delta, tape.inputs[i]);
    std::vector<double>& db = result.parameters.biases[i];
    db.assign(delta.cols(), 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
    }
    delta = matmul(delta, layers_[i].weight);
  }
  result.input = std::move(delta);
  return result;
}

MlpGradient Mlp::zero_gradient() const {
  MlpGradient g;
  for (const Layer& l : layers_) {
    g.weights.emplace_back(l.weight.rows(), l.weight.cols());
    g.biases.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

void MlpGradient::add(const MlpGradient& other) {
  require(weights.size() == other.weights.size(), "gradient layer count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    require(weights[i].size() == other.weights[i].size(), "gradient shape mismatch");
    for (std::size_t k = 0; k < weights[i].size(); ++k) weights[i].data()[k] += other.weights[i].data()[k];
    for (std::size_t k = 0; k < biases[i].size(); ++k) biases[i][k] += other.biases[i][k];
  }
}

std::vector<std::span<const double>> MlpGradient::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.emplace_back(weights[i].values());
    out.emplace_back(biases[i]);
  }
  return out;
}

}  // namespace kprog::nn
