#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kprog/data/windows.hpp"
#include "kprog/nn/matrix.hpp"
#include "kprog/nn/mlp.hpp"

namespace kprog::models {

// Hidden part of every encoder/decoder/operator network.
struct NetworkShape {
  std::size_t hidden_layers = 4;
  std::size_t hidden_width = 100;

  std::vector<std::size_t> dims(std::size_t input, std::size_t output) const;
};

struct LossTerms {
  double rec = 0.0;
  double lin = 0.0;
  double pred = 0.0;
  double regression = 0.0;  // FNN only
  double total = 0.0;       // rec + lin + pred + regression
};

enum class Objective {
  full,                 // rec + lin + pred
  reconstruction_only,  // rec alone (AE / KIDMAE ablations)
};

class SequenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// steps() = m + 1 consecutive windows for each of batch() sequences.
struct SequenceBatch {
  std::vector<nn::Matrix> x;  // x[j]: batch x state_dim
  std::vector<nn::Matrix> u;  // u[j]: batch x control_dim (0 columns when uncontrolled)
  std::vector<double> rul;    // label of the first window of each sequence

  std::size_t steps() const { return x.size(); }
  std::size_t horizon() const { return x.empty() ? 0 : x.size() - 1; }
  std::size_t batch() const { return x.empty() ? 0 : x.front().rows(); }
};

// Rows starts[i] + j, j = 0..horizon.
SequenceBatch gather(const data::WindowTable& table, std::span<const std::size_t> starts, std::size_t horizon);

// A single sequence; throws SequenceError unless the samples are consecutive
// windows of one trajectory.
SequenceBatch make_sequence(const std::vector<data::WindowSample>& samples);

// Deep Koopman operator: y = encoder(x), y_{t+1} = K y_t, x = decoder(y).
class DkoModel {
 public:
  struct Gradient {
    nn::MlpGradient encoder;
    nn::MlpGradient decoder;
    nn::Matrix koopman;
    std::vector<std::span<const double>> views(Objective objective = Objective::full) const;
  };

  DkoModel() = default;
  DkoModel(std::size_t state_dim, std::size_t observable_dim, std::size_t horizon, const NetworkShape& shape,
           std::uint64_t seed);
  DkoModel(nn::Mlp encoder, nn::Mlp decoder, nn::Matrix koopman, std::size_t horizon);

  std::size_t state_dim() const { return encoder.input_dim(); }
  std::size_t observable_dim() const { return encoder.output_dim(); }

  nn::Matrix encode(const nn::Matrix& x) const { return encoder.forward(x); }
  std::vector<double> encode(std::span<const double> x) const { return encoder.forward(x); }

  // Losses over the batch: squared Euclidean norms, averaged over sequences
  // and over the steps each term covers. rec uses all m + 1 windows, lin and
  // pred the m propagated ones. grad (if given) receives d total / d params.
  LossTerms losses(const SequenceBatch& batch, Objective objective = Objective::full,
                   Gradient* grad = nullptr) const;

  // The Koopman matrix is a trainable parameter only under the full objective.
  std::vector<std::span<double>> parameters(Objective objective = Objective::full);
  friend bool operator==(const DkoModel&, const DkoModel&) = default;

  nn::Mlp encoder;
  nn::Mlp decoder;
  nn::Matrix koopman;
  std::size_t horizon = 10;
};

// Koopman-inspired degradation model. The encoder sees (x, u); a control
// network maps u_t to a d x d degradation operator K_t; the decoder sees
// (y, u).
class KidmModel {
 public:
  struct Gradient {
    nn::MlpGradient encoder;
    nn::MlpGradient decoder;
    nn::MlpGradient control_operator;
    std::vector<std::span<const double>> views(Objective objective = Objective::full) const;
  };

  KidmModel() = default;
  KidmModel(std::size_t state_dim, std::size_t control_dim, std::size_t observable_dim, std::size_t horizon,
            const NetworkShape& shape, std::uint64_t seed);
  KidmModel(nn::Mlp encoder, nn::Mlp decoder, nn::Mlp control_operator, std::size_t horizon);

  std::size_t observable_dim() const { return encoder.output_dim(); }
  std::size_t control_dim() const { return control_operator.input_dim(); }
  std::size_t state_dim() const { return encoder.input_dim() - control_dim(); }

  nn::Matrix encode(const nn::Matrix& x, const nn::Matrix& u) const;
  std::vector<double> encode(std::span<const double> x, std::span<const double> u) const;

  // Degradation operator for one control window (row-major reshape).
  nn::Matrix operator_for(std::span<const double> u) const;

  // R_j = K_j ... K_1 y for the given controls; R_0 = y.
  std::vector<double> rollout(std::span<const double> y, const std::vector<std::vector<double>>& controls) const;

  // rec on the first window only; lin and pred over the m-step operator
  // rollout from it.
  LossTerms losses(const SequenceBatch& batch, Objective objective = Objective::full,
                   Gradient* grad = nullptr) const;

  // The control operator network is trainable only under the full objective.
  std::vector<std::span<double>> parameters(Objective objective = Objective::full);
  friend bool operator==(const KidmModel&, const KidmModel&) = default;

  nn::Mlp encoder;
  nn::Mlp decoder;
  nn::Mlp control_operator;
  std::size_t horizon = 10;
};

// Direct window-features -> RUL regressor (supervised baseline).
class FnnModel {
 public:
  struct Gradient {
    nn::MlpGradient network;
    std::vector<std::span<const double>> views(Objective = Objective::full) const { return network.views(); }
  };

  FnnModel() = default;
  FnnModel(std::size_t input_dim, const NetworkShape& shape, std::uint64_t seed);
  explicit FnnModel(nn::Mlp network) : network(std::move(network)) {}

  std::vector<double> predict(const nn::Matrix& features) const;

  // Mean squared error against the first-window RUL labels; objective ignored.
  LossTerms losses(const SequenceBatch& batch, Objective objective = Objective::full,
                   Gradient* grad = nullptr) const;

  std::vector<std::span<double>> parameters(Objective = Objective::full) { return network.parameters(); }
  friend bool operator==(const FnnModel&, const FnnModel&) = default;

  nn::Mlp network;
};

}  // namespace kprog::models
