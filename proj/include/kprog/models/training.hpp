#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kprog/core/rng.hpp"
#include "kprog/data/windows.hpp"
#include "kprog/models/koopman.hpp"
#include "kprog/nn/adam.hpp"

namespace kprog::models {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::size_t horizon = 10;
  double learning_rate = 1e-4;
  double weight_decay = 1e-7;
  std::uint64_t seed = 0;
  // 0 = every sequence each epoch; otherwise a fresh random subset of
  // max_batches_per_epoch minibatches per epoch.
  std::size_t max_batches_per_epoch = 0;

  void validate() const {
    if (epochs > 0 && batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
    if (horizon == 0) throw std::invalid_argument("train: horizon must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  }
};

struct TrainHistory {
  std::vector<LossTerms> epochs;  // mean minibatch losses per epoch
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::size_t epoch, const std::string& what)
      : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// Minibatch Adam on the model's total loss. Sequences of horizon + 1
// consecutive windows are drawn from the table for the full objective, single
// windows otherwise. Deterministic for a given config.seed.
template <typename Model>
TrainHistory train(Model& model, const data::WindowTable& table, const TrainConfig& config,
                   Objective objective = Objective::full) {
  config.validate();
  TrainHistory history;
  if (config.epochs == 0) return history;

  const std::size_t horizon = objective == Objective::full ? config.horizon : 0;
  const std::vector<std::size_t> starts = data::sequence_starts(table, horizon, table.stride);
  if (starts.empty())
    throw std::invalid_argument("train: no sequences of " + std::to_string(horizon + 1) + " consecutive windows");

  nn::AdamState adam;
  adam.learning_rate = config.learning_rate;
  adam.weight_decay = config.weight_decay;
  Rng rng(derive_seed(config.seed, 0x7472616eULL));

  std::vector<std::size_t> order = starts;
  typename Model::Gradient grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t batches = (order.size() + config.batch_size - 1) / config.batch_size;
    if (config.max_batches_per_epoch > 0) batches = std::min(batches, config.max_batches_per_epoch);

    LossTerms mean;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const SequenceBatch batch = gather(table, std::span(order).subspan(begin, end - begin), horizon);
      const LossTerms loss = model.losses(batch, objective, &grad);
      if (!std::isfinite(loss.total)) throw TrainingDivergedError(epoch, "non-finite loss");
      try {
        nn::adam_step(model.parameters(objective), grad.views(objective), adam);
      } catch (const nn::NonFiniteGradientError& e) {
        throw TrainingDivergedError(epoch, e.what());
      }
      mean.rec += loss.rec;
      mean.lin += loss.lin;
      mean.pred += loss.pred;
      mean.regression += loss.regression;
      mean.total += loss.total;
    }
    const double n = static_cast<double>(batches);
    mean.rec /= n;
    mean.lin /= n;
    mean.pred /= n;
    mean.regression /= n;
    mean.total /= n;
    history.epochs.push_back(mean);
  }
  return history;
}

}  // namespace kprog::models
