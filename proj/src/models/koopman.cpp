#include "kprog/models/koopman.hpp"

#include <algorithm>

#include "kprog/core/rng.hpp"

namespace kprog::models {

using nn::Matrix;

std::vector<std::size_t> NetworkShape::dims(std::size_t input, std::size_t output) const {
  std::vector<std::size_t> out{input};
  for (std::size_t i = 0; i < hidden_layers; ++i) out.push_back(hidden_width);
  out.push_back(output);
  return out;
}

namespace {

Matrix stack(const std::vector<Matrix>& parts, std::size_t count) {
  std::size_t rows = 0;
  for (std::size_t i = 0; i < count; ++i) rows += parts[i].rows();
  Matrix out(rows, parts.front().cols());
  double* dst = out.data();
  for (std::size_t i = 0; i < count; ++i) dst = std::copy(parts[i].data(), parts[i].data() + parts[i].size(), dst);
  return out;
}

void copy_rows(const Matrix& src, std::size_t src_row, Matrix& dst, std::size_t dst_row, std::size_t count) {
  std::copy(src.data() + src_row * src.cols(), src.data() + (src_row + count) * src.cols(),
            dst.data() + dst_row * dst.cols());
}

// Writes [a | b] into dst starting at dst_row.
void put_concat(Matrix& dst, std::size_t dst_row, const Matrix& a, const Matrix& b) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto out = dst.row(dst_row + r);
    std::copy(a.row(r).begin(), a.row(r).end(), out.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), out.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
}

// sum over rows of ||target - pred||^2; if grad is set, grad row gets
// -2 * (target - pred) * scale.
double squared_error(std::span<const double> target, std::span<const double> pred, std::span<double> grad,
                     double scale) {
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double e = target[i] - pred[i];
    sum += e * e;
    if (!grad.empty()) grad[i] = -2.0 * e * scale;
  }
  return sum;
}

void check_batch(const SequenceBatch& batch, std::size_t state_dim, std::size_t control_dim) {
  if (batch.steps() == 0 || batch.batch() == 0) throw SequenceError("empty sequence batch");
  if (batch.u.size() != batch.steps()) throw SequenceError("state and control step counts differ");
  for (std::size_t j = 0; j < batch.steps(); ++j) {
    nn::require(batch.x[j].rows() == batch.batch() && batch.x[j].cols() == state_dim,
                "sequence step " + std::to_string(j) + ": state shape mismatch");
    nn::require(batch.u[j].rows() == batch.batch() && batch.u[j].cols() == control_dim,
                "sequence step " + std::to_string(j) + ": control shape mismatch");
  }
}

template <typename... Grads>
std::vector<std::span<const double>> join_views(const Grads&... grads) {
  std::vector<std::span<const double>> out;
  (
      [&] {
        auto v = grads.views();
        out.insert(out.end(), v.begin(), v.end());
      }(),
      ...);
  return out;
}

}  // namespace

SequenceBatch gather(const data::WindowTable& table, std::span<const std::size_t> starts, std::size_t horizon) {
  SequenceBatch batch;
  const std::size_t b = starts.size();
  for (std::size_t j = 0; j <= horizon; ++j) {
    Matrix x(b, table.x.cols());
    Matrix u(b, table.u.cols());
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t row = starts[i] + j;
      nn::require(row < table.size(), "gather: sequence runs past the end of the table");
      copy_rows(table.x, row, x, i, 1);
      copy_rows(table.u, row, u, i, 1);
    }
    batch.x.push_back(std::move(x));
    batch.u.push_back(std::move(u));
  }
  for (std::size_t i = 0; i < b; ++i) batch.rul.push_back(table.rul[starts[i]]);
  return batch;
}

SequenceBatch make_sequence(const std::vector<data::WindowSample>& samples) {
  if (samples.empty()) throw SequenceError("empty sequence");
  for (std::size_t j = 1; j < samples.size(); ++j) {
    if (samples[j].trajectory != samples[0].trajectory)
      throw SequenceError("sequence mixes trajectories");
    const auto stride = samples.size() > 1 ? samples[1].start - samples[0].start : 0;
    if (samples[j].start <= samples[j - 1].start || samples[j].start - samples[j - 1].start != stride)
      throw SequenceError("sequence windows are not consecutive");
  }
  SequenceBatch batch;
  for (const auto& s : samples) {
    batch.x.emplace_back(1, s.x.size(), s.x);
    batch.u.emplace_back(1, s.u.size(), s.u);
  }
  batch.rul.push_back(samples.front().rul);
  return batch;
}

// ---------------------------------------------------------------- DKO

DkoModel::DkoModel(std::size_t state_dim, std::size_t observable_dim, std::size_t horizon,
                   const NetworkShape& shape, std::uint64_t seed)
    : koopman(Matrix::identity(observable_dim)), horizon(horizon) {
  Rng rng(seed);
  const auto enc = shape.dims(state_dim, observable_dim);
  const auto dec = shape.dims(observable_dim, state_dim);
  encoder = nn::Mlp(enc, rng);
  decoder = nn::Mlp(dec, rng);
}

DkoModel::DkoModel(nn::Mlp enc, nn::Mlp dec, Matrix k, std::size_t horizon)
    : encoder(std::move(enc)), decoder(std::move(dec)), koopman(std::move(k)), horizon(horizon) {
  nn::require(koopman.square() && koopman.rows() == encoder.output_dim(), "koopman matrix must be d x d");
  nn::require(decoder.input_dim() == encoder.output_dim(), "decoder input must equal observable dim");
  nn::require(decoder.output_dim() == encoder.input_dim(), "decoder must reconstruct the state");
}

std::vector<std::span<const double>> DkoModel::Gradient::views(Objective objective) const {
  auto out = join_views(encoder, decoder);
  if (objective == Objective::full) out.emplace_back(koopman.values());
  return out;
}

std::vector<std::span<double>> DkoModel::parameters(Objective objective) {
  auto out = encoder.parameters();
  auto dec = decoder.parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  if (objective == Objective::full) out.emplace_back(koopman.values());
  return out;
}

LossTerms DkoModel::losses(const SequenceBatch& batch, Objective objective, Gradient* grad) const {
  check_batch(batch, state_dim(), 0);
  const std::size_t B = batch.batch();
  const std::size_t S = batch.steps();
  const std::size_t m = batch.horizon();
  const std::size_t d = observable_dim();
  const bool dynamics = objective == Objective::full && m > 0;

  const Matrix x_all = stack(batch.x, S);
  nn::Tape enc_tape;
  const Matrix y_all = encoder.forward(x_all, enc_tape);

  // z[j] = K^j y_0 as rows.
  std::vector<Matrix> z;
  Matrix dec_in = y_all;
  if (dynamics) {
    z.push_back(slice_rows(y_all, 0, B));
    for (std::size_t j = 1; j <= m; ++j) z.push_back(matmul_transposed(z[j - 1], koopman));
    dec_in = Matrix(S * B + m * B, d);
    copy_rows(y_all, 0, dec_in, 0, S * B);
    for (std::size_t j = 1; j <= m; ++j) copy_rows(z[j], 0, dec_in, S * B + (j - 1) * B, B);
  }
  nn::Tape dec_tape;
  const Matrix x_hat = decoder.forward(dec_in, dec_tape);

  Matrix dx_hat;
  if (grad) dx_hat = Matrix(x_hat.rows(), x_hat.cols());
  auto grad_row = [&](std::size_t r) { return grad ? dx_hat.row(r) : std::span<double>{}; };

  LossTerms loss;
  const double rec_scale = 1.0 / static_cast<double>(S * B);
  for (std::size_t r = 0; r < S * B; ++r)
    loss.rec += squared_error(x_all.row(r), x_hat.row(r), grad_row(r), rec_scale);
  loss.rec *= rec_scale;

  const double dyn_scale = dynamics ? 1.0 / static_cast<double>(m * B) : 0.0;
  if (dynamics) {
    for (std::size_t j = 1; j <= m; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        loss.lin += squared_error(y_all.row(j * B + b), z[j].row(b), {}, 0.0);
        const std::size_t r = S * B + (j - 1) * B + b;
        loss.pred += squared_error(x_all.row(j * B + b), x_hat.row(r), grad_row(r), dyn_scale);
      }
    loss.lin *= dyn_scale;
    loss.pred *= dyn_scale;
  }
  loss.total = loss.rec + loss.lin + loss.pred;
  if (!grad) return loss;

  nn::MlpBackward dec_back = decoder.gradient(dec_tape, dx_hat);
  grad->decoder = std::move(dec_back.parameters);
  Matrix dy_all = slice_rows(dec_back.input, 0, S * B);
  grad->koopman = Matrix(d, d);

  if (dynamics) {
    std::vector<Matrix> dz(m + 1);
    dz[0] = Matrix(B, d);
    for (std::size_t j = 1; j <= m; ++j) dz[j] = slice_rows(dec_back.input, S * B + (j - 1) * B, B);
    for (std::size_t j = 1; j <= m; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        auto y = y_all.row(j * B + b);
        auto zj = z[j].row(b);
        auto dy = dy_all.row(j * B + b);
        auto dzj = dz[j].row(b);
        for (std::size_t a = 0; a < d; ++a) {
          const double g = 2.0 * (y[a] - zj[a]) * dyn_scale;
          dy[a] += g;
          dzj[a] -= g;
        }
      }
    for (std::size_t j = m; j >= 1; --j) {
      accumulate_transposed_matmul(grad->koopman, dz[j], z[j - 1]);
      dz[j - 1] = dz[j - 1] + matmul(dz[j], koopman);
    }
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t a = 0; a < d; ++a) dy_all(b, a) += dz[0](b, a);
  }

  grad->encoder = encoder.gradient(enc_tape, dy_all).parameters;
  return loss;
}

// ---------------------------------------------------------------- KIDM

KidmModel::KidmModel(std::size_t state_dim, std::size_t control_dim, std::size_t observable_dim,
                     std::size_t horizon, const NetworkShape& shape, std::uint64_t seed)
    : horizon(horizon) {
  Rng rng(seed);
  encoder = nn::Mlp(shape.dims(state_dim + control_dim, observable_dim), rng);
  decoder = nn::Mlp(shape.dims(observable_dim + control_dim, state_dim), rng);
  control_operator = nn::Mlp(shape.dims(control_dim, observable_dim * observable_dim), rng);
  // Start every degradation operator near the identity.
  nn::Layer& head = control_operator.mutable_layer(control_operator.layer_count() - 1);
  for (double& w : head.weight.values()) w *= 0.01;
  for (std::size_t i = 0; i < observable_dim; ++i) head.bias[i * observable_dim + i] = 1.0;
}

KidmModel::KidmModel(nn::Mlp enc, nn::Mlp dec, nn::Mlp op, std::size_t horizon)
    : encoder(std::move(enc)), decoder(std::move(dec)), control_operator(std::move(op)), horizon(horizon) {
  const std::size_t d = encoder.output_dim();
  nn::require(control_operator.output_dim() == d * d, "control operator must output d*d entries");
  nn::require(decoder.input_dim() == d + control_dim(), "decoder input must be observables + control");
  nn::require(encoder.input_dim() > control_dim(), "encoder input must be state + control");
  nn::require(decoder.output_dim() == state_dim(), "decoder must reconstruct the state");
}

std::vector<std::span<const double>> KidmModel::Gradient::views(Objective objective) const {
  return objective == Objective::full ? join_views(encoder, decoder, control_operator)
                                      : join_views(encoder, decoder);
}

std::vector<std::span<double>> KidmModel::parameters(Objective objective) {
  auto out = encoder.parameters();
  auto dec = decoder.parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  if (objective == Objective::full) {
    auto op = control_operator.parameters();
    out.insert(out.end(), op.begin(), op.end());
  }
  return out;
}

Matrix KidmModel::encode(const Matrix& x, const Matrix& u) const { return encoder.forward(hconcat(x, u)); }

std::vector<double> KidmModel::encode(std::span<const double> x, std::span<const double> u) const {
  std::vector<double> in(x.begin(), x.end());
  in.insert(in.end(), u.begin(), u.end());
  return encoder.forward(in);
}

Matrix KidmModel::operator_for(std::span<const double> u) const {
  const std::size_t d = observable_dim();
  return Matrix(d, d, control_operator.forward(u));
}

std::vector<double> KidmModel::rollout(std::span<const double> y,
                                       const std::vector<std::vector<double>>& controls) const {
  std::vector<double> r(y.begin(), y.end());
  for (const auto& u : controls) r = matvec(operator_for(u), r);
  return r;
}

LossTerms KidmModel::losses(const SequenceBatch& batch, Objective objective, Gradient* grad) const {
  check_batch(batch, state_dim(), control_dim());
  const std::size_t B = batch.batch();
  const std::size_t m = batch.horizon();
  const std::size_t d = observable_dim();
  const std::size_t nu = control_dim();
  const bool dynamics = objective == Objective::full && m > 0;
  const std::size_t S = dynamics ? m + 1 : 1;

  Matrix enc_in(S * B, state_dim() + nu);
  for (std::size_t j = 0; j < S; ++j) put_concat(enc_in, j * B, batch.x[j], batch.u[j]);
  nn::Tape enc_tape;
  const Matrix y_all = encoder.forward(enc_in, enc_tape);

  // Operators K_j = g(u_j), j = 1..m, one row of d*d entries per sequence.
  nn::Tape op_tape;
  Matrix k_flat;
  std::vector<Matrix> r;  // r[j]: rollout after j operators
  r.push_back(slice_rows(y_all, 0, B));
  if (dynamics) {
    k_flat = control_operator.forward(stack(std::vector<Matrix>(batch.u.begin() + 1, batch.u.end()), m), op_tape);
    for (std::size_t j = 1; j <= m; ++j) {
      Matrix next(B, d);
      for (std::size_t b = 0; b < B; ++b) {
        const auto k = k_flat.row((j - 1) * B + b);
        const auto prev = r[j - 1].row(b);
        auto out = next.row(b);
        for (std::size_t a = 0; a < d; ++a) {
          double acc = 0.0;
          for (std::size_t c = 0; c < d; ++c) acc += k[a * d + c] * prev[c];
          out[a] = acc;
        }
      }
      r.push_back(std::move(next));
    }
  }

  const std::size_t dec_rows = B + (dynamics ? m * B : 0);
  Matrix dec_in(dec_rows, d + nu);
  put_concat(dec_in, 0, r[0], batch.u[0]);
  if (dynamics)
    for (std::size_t j = 1; j <= m; ++j) put_concat(dec_in, B + (j - 1) * B, r[j], batch.u[j]);
  nn::Tape dec_tape;
  const Matrix x_hat = decoder.forward(dec_in, dec_tape);

  Matrix dx_hat;
  if (grad) dx_hat = Matrix(x_hat.rows(), x_hat.cols());
  auto grad_row = [&](std::size_t row) { return grad ? dx_hat.row(row) : std::span<double>{}; };

  LossTerms loss;
  const double rec_scale = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b)
    loss.rec += squared_error(batch.x[0].row(b), x_hat.row(b), grad_row(b), rec_scale);
  loss.rec *= rec_scale;

  const double dyn_scale = dynamics ? 1.0 / static_cast<double>(m * B) : 0.0;
  if (dynamics) {
    for (std::size_t j = 1; j <= m; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        loss.lin += squared_error(y_all.row(j * B + b), r[j].row(b), {}, 0.0);
        const std::size_t row = B + (j - 1) * B + b;
        loss.pred += squared_error(batch.x[j].row(b), x_hat.row(row), grad_row(row), dyn_scale);
      }
    loss.lin *= dyn_scale;
    loss.pred *= dyn_scale;
  }
  loss.total = loss.rec + loss.lin + loss.pred;
  if (!grad) return loss;

  nn::MlpBackward dec_back = decoder.gradient(dec_tape, dx_hat);
  grad->decoder = std::move(dec_back.parameters);

  Matrix dy_all(S * B, d);
  std::vector<Matrix> dr(m + 1, Matrix(B, d));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t a = 0; a < d; ++a) dr[0](b, a) = dec_back.input(b, a);

  if (dynamics) {
    for (std::size_t j = 1; j <= m; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        const auto in_grad = dec_back.input.row(B + (j - 1) * B + b);
        const auto y = y_all.row(j * B + b);
        const auto rj = r[j].row(b);
        for (std::size_t a = 0; a < d; ++a) {
          const double g = 2.0 * (y[a] - rj[a]) * dyn_scale;
          dy_all(j * B + b, a) += g;
          dr[j](b, a) = in_grad[a] - g;
        }
      }

    Matrix dk_flat(m * B, d * d);
    for (std::size_t j = m; j >= 1; --j)
      for (std::size_t b = 0; b < B; ++b) {
        const auto k = k_flat.row((j - 1) * B + b);
        auto dk = dk_flat.row((j - 1) * B + b);
        const auto prev = r[j - 1].row(b);
        const auto g = dr[j].row(b);
        auto dprev = dr[j - 1].row(b);
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t c = 0; c < d; ++c) {
            dk[a * d + c] = g[a] * prev[c];
            dprev[c] += k[a * d + c] * g[a];
          }
      }
    grad->control_operator = control_operator.gradient(op_tape, dk_flat).parameters;
  } else {
    grad->control_operator = control_operator.zero_gradient();
  }

  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t a = 0; a < d; ++a) dy_all(b, a) += dr[0](b, a);
  grad->encoder = encoder.gradient(enc_tape, dy_all).parameters;
  return loss;
}

// ---------------------------------------------------------------- FNN

FnnModel::FnnModel(std::size_t input_dim, const NetworkShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  network = nn::Mlp(shape.dims(input_dim, 1), rng);
}

std::vector<double> FnnModel::predict(const Matrix& features) const {
  const Matrix out = network.forward(features);
  return {out.values().begin(), out.values().end()};
}

LossTerms FnnModel::losses(const SequenceBatch& batch, Objective, Gradient* grad) const {
  if (batch.steps() == 0 || batch.batch() == 0) throw SequenceError("empty batch");
  const std::size_t B = batch.batch();
  nn::require(batch.rul.size() == B, "fnn batch needs one label per sequence");
  const Matrix features = batch.u[0].cols() > 0 ? hconcat(batch.x[0], batch.u[0]) : batch.x[0];
  nn::Tape tape;
  const Matrix pred = network.forward(features, tape);

  LossTerms loss;
  Matrix dpred(B, 1);
  for (std::size_t b = 0; b < B; ++b) {
    const double e = pred(b, 0) - batch.rul[b];
    loss.regression += e * e;
    dpred(b, 0) = 2.0 * e / static_cast<double>(B);
  }
  loss.regression /= static_cast<double>(B);
  loss.total = loss.regression;
  if (grad) grad->network = network.gradient(tape, dpred).parameters;
  return loss;
}

}  // namespace kprog::models
