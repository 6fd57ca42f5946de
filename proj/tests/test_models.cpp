#include <cmath>
#include <vector>

#include "doctest.h"
#include "kprog/battery/simulator.hpp"
#include "kprog/core/rng.hpp"
#include "kprog/data/series.hpp"
#include "kprog/models/bundle.hpp"
#include "kprog/models/koopman.hpp"
#include "kprog/models/training.hpp"
#include "support/oracles.hpp"

using namespace kprog;
using namespace kprog::models;
using nn::Matrix;

namespace {

using Vec = std::vector<double>;

double sq(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

Vec cat(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Vec mat_vec(const Matrix& k, const Vec& v) {
  Vec out(k.rows(), 0.0);
  for (std::size_t r = 0; r < k.rows(); ++r)
    for (std::size_t c = 0; c < k.cols(); ++c) out[r] += k(r, c) * v[c];
  return out;
}

Vec row(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

// Loss terms written out one sequence at a time.
LossTerms dko_oracle(const DkoModel& m, const SequenceBatch& batch) {
  LossTerms l;
  const std::size_t B = batch.batch(), S = batch.steps(), H = batch.horizon();
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<Vec> x(S), y(S);
    for (std::size_t j = 0; j < S; ++j) {
      x[j] = row(batch.x[j], b);
      y[j] = oracle::mlp_forward(m.encoder, x[j]);
      l.rec += sq(x[j], oracle::mlp_forward(m.decoder, y[j]));
    }
    Vec z = y[0];
    for (std::size_t j = 1; j <= H; ++j) {
      z = mat_vec(m.koopman, z);
      l.lin += sq(y[j], z);
      l.pred += sq(x[j], oracle::mlp_forward(m.decoder, z));
    }
  }
  l.rec /= double(S * B);
  if (H > 0) {
    l.lin /= double(H * B);
    l.pred /= double(H * B);
  }
  l.total = l.rec + l.lin + l.pred;
  return l;
}

LossTerms kidm_oracle(const KidmModel& m, const SequenceBatch& batch) {
  LossTerms l;
  const std::size_t B = batch.batch(), H = batch.horizon();
  const std::size_t d = m.observable_dim();
  for (std::size_t b = 0; b < B; ++b) {
    const Vec x0 = row(batch.x[0], b), u0 = row(batch.u[0], b);
    Vec r = oracle::mlp_forward(m.encoder, cat(x0, u0));
    l.rec += sq(x0, oracle::mlp_forward(m.decoder, cat(r, u0)));
    for (std::size_t j = 1; j <= H; ++j) {
      const Vec xj = row(batch.x[j], b), uj = row(batch.u[j], b);
      const Vec k = oracle::mlp_forward(m.control_operator, uj);
      r = mat_vec(Matrix(d, d, k), r);
      l.lin += sq(oracle::mlp_forward(m.encoder, cat(xj, uj)), r);
      l.pred += sq(xj, oracle::mlp_forward(m.decoder, cat(r, uj)));
    }
  }
  l.rec /= double(B);
  if (H > 0) {
    l.lin /= double(H * B);
    l.pred /= double(H * B);
  }
  l.total = l.rec + l.lin + l.pred;
  return l;
}

SequenceBatch random_batch(Rng& rng, std::size_t B, std::size_t H, std::size_t nx, std::size_t nu) {
  SequenceBatch s;
  for (std::size_t j = 0; j <= H; ++j) {
    Matrix x(B, nx), u(B, nu);
    for (double& v : x.values()) v = rng.normal();
    for (double& v : u.values()) v = rng.normal();
    s.x.push_back(x);
    s.u.push_back(u);
  }
  for (std::size_t b = 0; b < B; ++b) s.rul.push_back(rng.uniform());
  return s;
}

void check_terms(const LossTerms& a, const LossTerms& b) {
  CHECK(a.rec == doctest::Approx(b.rec).epsilon(1e-10));
  CHECK(a.lin == doctest::Approx(b.lin).epsilon(1e-10));
  CHECK(a.pred == doctest::Approx(b.pred).epsilon(1e-10));
  CHECK(a.total == doctest::Approx(a.rec + a.lin + a.pred).epsilon(1e-12));
}

// Nudges every parameter so that K is not the identity and gradients are generic.
template <typename Model>
void perturb(Model& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto p : m.parameters()) for (double& v : p) v += 0.05 * rng.normal();
}

template <typename Model>
void check_gradient(Model& m, const SequenceBatch& batch, Objective obj, std::size_t probes) {
  typename Model::Gradient g;
  m.losses(batch, obj, &g);
  const auto params = m.parameters(obj);
  const auto grads = g.views(obj);
  REQUIRE(params.size() == grads.size());
  Rng rng(17);
  std::size_t bad = 0, total = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    REQUIRE(params[t].size() == grads[t].size());
    for (std::size_t k = 0; k < probes && k < params[t].size(); ++k) {
      const std::size_t i = static_cast<std::size_t>(rng.index(params[t].size()));
      double* p = &params[t][i];
      const double numeric =
          oracle::finite_difference({p}, [&] { return m.losses(batch, obj).total; }, 1e-5)[0];
      ++total;
      if (!oracle::close(grads[t][i], numeric, 1e-4, 1e-7)) ++bad;
    }
  }
  CHECK(total > 0);
  CHECK(bad == 0);
}

data::WindowTable battery_table(ModelKind kind, std::size_t count, std::size_t window) {
  const auto fleet = battery::simulate_fleet(battery::LoadProfile::varying_load(), count, 3);
  std::vector<data::TimeSeries> series;
  for (const auto& t : fleet) series.push_back(data::to_series(t));
  const auto layout = battery_layout_for(kind, window);
  const auto norm = data::Standardizer::fit(series, {"voltage_v", "temperature_k", "current_a"});
  return data::build_table(series, layout, &norm);
}

const NetworkShape kSmall{2, 8};

}  // namespace

TEST_CASE("dko losses match a per-sequence computation") {
  Rng rng(1);
  DkoModel m(6, 3, 4, kSmall, 5);
  perturb(m, 2);
  for (std::size_t H : {0u, 1u, 4u}) {
    const auto batch = random_batch(rng, 3, H, 6, 0);
    check_terms(m.losses(batch), dko_oracle(m, batch));
  }
  const auto batch = random_batch(rng, 3, 3, 6, 0);
  const LossTerms rec_only = m.losses(batch, Objective::reconstruction_only);
  CHECK(rec_only.lin == 0.0);
  CHECK(rec_only.pred == 0.0);
  CHECK(rec_only.total == rec_only.rec);
}

TEST_CASE("kidm losses match a per-sequence computation") {
  Rng rng(3);
  KidmModel m(4, 2, 3, 5, kSmall, 7);
  perturb(m, 4);
  for (std::size_t H : {0u, 1u, 5u}) {
    const auto batch = random_batch(rng, 4, H, 4, 2);
    check_terms(m.losses(batch), kidm_oracle(m, batch));
  }
  // m = 1 reduces to the three single-step terms
  const auto one = random_batch(rng, 1, 1, 4, 2);
  const LossTerms l = m.losses(one);
  const Vec x0 = row(one.x[0], 0), u0 = row(one.u[0], 0), x1 = row(one.x[1], 0), u1 = row(one.u[1], 0);
  const Vec y0 = oracle::mlp_forward(m.encoder, cat(x0, u0));
  const Vec y1 = oracle::mlp_forward(m.encoder, cat(x1, u1));
  const Vec ky = mat_vec(Matrix(3, 3, oracle::mlp_forward(m.control_operator, u1)), y0);
  CHECK(l.rec == doctest::Approx(sq(x0, oracle::mlp_forward(m.decoder, cat(y0, u0)))));
  CHECK(l.lin == doctest::Approx(sq(y1, ky)));
  CHECK(l.pred == doctest::Approx(sq(x1, oracle::mlp_forward(m.decoder, cat(ky, u1)))));
}

TEST_CASE("perfect identity dynamics on a constant sequence give zero dynamic loss") {
  DkoModel m(2, 2, 3, NetworkShape{0, 0}, 1);
  // zero hidden layers: encoder and decoder are single affine maps
  for (auto* net : {&m.encoder, &m.decoder}) {
    nn::Layer& l = net->mutable_layer(0);
    l.weight = Matrix::identity(2);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  SequenceBatch s;
  for (int j = 0; j < 4; ++j) {
    s.x.push_back(Matrix{{0.3, -1.2}});
    s.u.push_back(Matrix(1, 0));
  }
  const LossTerms l = m.losses(s);
  CHECK(l.total == 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(9);
  SUBCASE("dko full") {
    DkoModel m(5, 3, 3, kSmall, 11);
    perturb(m, 12);
    check_gradient(m, random_batch(rng, 3, 3, 5, 0), Objective::full, 12);
  }
  SUBCASE("dko reconstruction") {
    DkoModel m(5, 3, 3, kSmall, 13);
    check_gradient(m, random_batch(rng, 3, 2, 5, 0), Objective::reconstruction_only, 12);
  }
  SUBCASE("kidm full") {
    KidmModel m(4, 3, 3, 3, kSmall, 14);
    perturb(m, 15);
    check_gradient(m, random_batch(rng, 3, 3, 4, 3), Objective::full, 12);
  }
  SUBCASE("kidm reconstruction") {
    KidmModel m(4, 3, 3, 3, kSmall, 16);
    check_gradient(m, random_batch(rng, 3, 0, 4, 3), Objective::reconstruction_only, 12);
  }
  SUBCASE("fnn") {
    FnnModel m(6, kSmall, 18);
    check_gradient(m, random_batch(rng, 5, 0, 6, 0), Objective::full, 12);
  }
}

TEST_CASE("every parameter group receives gradient under the full objective") {
  Rng rng(21);
  KidmModel m(4, 2, 3, 3, kSmall, 22);
  perturb(m, 23);
  KidmModel::Gradient g;
  m.losses(random_batch(rng, 4, 3, 4, 2), Objective::full, &g);
  auto norm = [](const nn::MlpGradient& mg) {
    double s = 0.0;
    for (auto v : mg.views()) for (double x : v) s += x * x;
    return s;
  };
  CHECK(norm(g.encoder) > 0.0);
  CHECK(norm(g.decoder) > 0.0);
  CHECK(norm(g.control_operator) > 0.0);
}

TEST_CASE("kidm operators start near the identity") {
  KidmModel m(6, 3, 4, 2, kSmall, 30);
  Rng rng(31);
  Vec u(3);
  for (double& v : u) v = rng.normal();
  const Matrix k = m.operator_for(u);
  double off = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) off = std::max(off, std::abs(k(r, c) - (r == c ? 1.0 : 0.0)));
  CHECK(off < 0.2);
  DkoModel dko(6, 4, 2, kSmall, 30);
  CHECK(dko.koopman == Matrix::identity(4));
}

TEST_CASE("rollout composes operators in order") {
  KidmModel m(4, 2, 3, 4, kSmall, 40);
  perturb(m, 41);
  Rng rng(42);
  Vec y(3);
  for (double& v : y) v = rng.normal();
  std::vector<Vec> controls(5, Vec(2));
  for (auto& u : controls) for (double& v : u) v = rng.normal();
  // R_5 = K_5 (K_4 ... K_1 y)
  const Vec split = m.rollout(m.rollout(y, {controls.begin(), controls.begin() + 2}),
                              {controls.begin() + 2, controls.end()});
  const Vec whole = m.rollout(y, controls);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(split[i] - whole[i]) < 1e-9);
  // constant control: R_m = K^m y
  const std::vector<Vec> same(4, controls[0]);
  const Vec pow = mat_vec(nn::matrix_power(m.operator_for(controls[0]), 4), y);
  const Vec r = m.rollout(y, same);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(pow[i] - r[i]) < 1e-9);
  CHECK(m.rollout(y, {}) == y);
}

TEST_CASE("encoding is deterministic") {
  KidmModel m(4, 2, 3, 2, kSmall, 50);
  const Vec x{0.1, 0.2, 0.3, 0.4}, u{1.0, -1.0};
  CHECK(m.encode(x, u) == m.encode(x, u));
  const Vec y = m.encode(x, u);
  const Vec o = oracle::mlp_forward(m.encoder, cat(x, u));
  for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(o[i]).epsilon(1e-12));
}

TEST_CASE("sequences must be consecutive windows of one trajectory") {
  auto w = [](std::size_t traj, std::size_t start) {
    data::WindowSample s;
    s.x = {0.0, 1.0};
    s.trajectory = traj;
    s.start = start;
    return s;
  };
  CHECK_NOTHROW(make_sequence({w(0, 0), w(0, 100), w(0, 200)}));
  CHECK_THROWS_AS(make_sequence({w(0, 0), w(0, 100), w(0, 300)}), SequenceError);
  CHECK_THROWS_AS(make_sequence({w(0, 0), w(1, 100)}), SequenceError);
  CHECK_THROWS_AS(make_sequence({w(0, 100), w(0, 0)}), SequenceError);
  CHECK_THROWS_AS(make_sequence({}), SequenceError);
}

TEST_CASE("training") {
  const auto table = battery_table(ModelKind::kidm, 2, 20);
  const auto layout = battery_layout_for(ModelKind::kidm, 20);
  const data::Standardizer norm{{"voltage_v", "temperature_k", "current_a"}, {0, 0, 0}, {1, 1, 1}};
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.horizon = 3;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3;
  cfg.max_batches_per_epoch = 20;

  SUBCASE("zero epochs leave the model unchanged") {
    ModelBundle b = make_bundle(ModelKind::kidm, layout, norm, 3, 3, kSmall, 1);
    const ModelBundle before = b;
    CHECK(train_bundle(b, table, table, cfg).epochs.empty());
    CHECK(b == before);
  }
  SUBCASE("same seed, same model") {
    cfg.epochs = 3;
    ModelBundle a = make_bundle(ModelKind::kidm, layout, norm, 3, 3, kSmall, 1);
    ModelBundle b = a;
    const auto ha = train_bundle(a, table, table, cfg);
    const auto hb = train_bundle(b, table, table, cfg);
    CHECK(a == b);
    CHECK(ha.epochs.back().total == hb.epochs.back().total);
    CHECK(ha.epochs.back().total < ha.epochs.front().total);
  }
  SUBCASE("reconstruction ablation leaves the operator untouched") {
    cfg.epochs = 2;
    ModelBundle b = make_bundle(ModelKind::kidmae, layout, norm, 3, 3, kSmall, 1);
    const auto op = std::get<KidmModel>(b.model).control_operator;
    const auto h = train_bundle(b, table, table, cfg);
    CHECK(std::get<KidmModel>(b.model).control_operator == op);
    CHECK(h.epochs[0].total == h.epochs[0].rec);
    CHECK(h.epochs[0].lin == 0.0);
  }
  SUBCASE("autoencoder ablation keeps K at the identity") {
    cfg.epochs = 2;
    const auto t = battery_table(ModelKind::ae, 2, 20);
    ModelBundle b = make_bundle(ModelKind::ae, battery_layout_for(ModelKind::ae, 20), norm, 3, 3, kSmall, 1);
    train_bundle(b, t, t, cfg);
    CHECK(std::get<DkoModel>(b.model).koopman == Matrix::identity(3));
  }
}

TEST_CASE("bundle json round trip") {
  const data::Standardizer norm{{"voltage_v", "temperature_k", "current_a"}, {3.6, 300, 0}, {0.2, 2, 1.5}};
  for (ModelKind kind : {ModelKind::dko, ModelKind::ae, ModelKind::kidm, ModelKind::kidmae, ModelKind::fnn}) {
    const ModelBundle b = make_bundle(kind, battery_layout_for(kind, 10), norm, 4, 6, kSmall, 3);
    const ModelBundle back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
    CHECK(back == b);
  }
  CHECK_THROWS(model_kind_from_string("lstm"));
  CHECK_THROWS(make_bundle(ModelKind::dko, battery_layout_for(ModelKind::kidm, 10), norm, 4, 6, kSmall, 3));
  CHECK_THROWS(make_bundle(ModelKind::kidm, battery_layout_for(ModelKind::dko, 10), norm, 4, 6, kSmall, 3));
}
