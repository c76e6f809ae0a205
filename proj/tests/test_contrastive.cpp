#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sifter/contrastive.hpp"
#include "sifter/error.hpp"

using namespace sifter;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.data()) x = rng.uniform(-1, 1);
  return t;
}

Tensor permute_rows(const Tensor& m, const std::vector<std::size_t>& order) {
  Tensor out = Tensor::matrix(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) = m.at(order[r], c);
  }
  return out;
}

std::vector<EncodedTriple> toy_triples(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<EncodedTriple> out;
  for (std::size_t i = 0; i < n; ++i) {
    EncodedTriple t;
    for (std::size_t k = 0; k < 4 + rng.below(3); ++k) t.x.push_back(1 + rng.below(vocab - 1));
    t.y_plus = t.x;
    t.y_plus.push_back(1 + rng.below(vocab - 1));
    t.z_plus.assign(t.x.begin(), t.x.begin() + 3);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<EncodedPair> toy_dev(std::span<const EncodedTriple> triples) {
  std::vector<EncodedPair> out;
  for (std::size_t i = 0; i + 1 < triples.size(); ++i) {
    out.push_back({triples[i].x, triples[i + 1].x, static_cast<double>(i % 5)});
  }
  return out;
}

}  // namespace

TEST_CASE("cosine") {
  const Tensor u = Tensor::of({0.3, -1.2, 2.5});
  CHECK(std::abs(cosine(u, u) - 1.0) < 1e-15);
  CHECK(cosine(Tensor::of({1, 0}), Tensor::of({0, 1})) == 0.0);
  CHECK(std::abs(cosine(Tensor::of({1, 1}), Tensor::of({1, 0})) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK_THROWS_AS(cosine(Tensor::of({0, 0}), Tensor::of({1, 0})), DegenerateInputError);

  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor a = random_matrix(1, 6, rng).row_vector(0);
    const Tensor b = random_matrix(1, 6, rng).row_vector(0);
    const double c = cosine(a, b);
    CHECK(c >= -1.0 - 1e-12);
    CHECK(c <= 1.0 + 1e-12);
  }
}

TEST_CASE("info_nce closed forms") {
  Rng rng(2);
  const Tensor one = random_matrix(1, 4, rng);
  CHECK(info_nce(one, random_matrix(1, 4, rng), 0.05) == 0.0);

  // All similarities equal: every row of both sides is the same direction.
  for (std::size_t n : {2u, 5u, 16u}) {
    Tensor same = Tensor::matrix(n, 3);
    for (std::size_t r = 0; r < n; ++r) {
      same.at(r, 0) = 1.0 + r;
      same.at(r, 1) = 2.0 + 2.0 * r;
      same.at(r, 2) = -1.0 - r;
    }
    CHECK(std::abs(info_nce(same, same, 0.05) - std::log(static_cast<double>(n))) < 1e-12);
  }

  const Tensor eye = Tensor::of_rows({{1, 0}, {0, 1}});
  CHECK(std::abs(info_nce(eye, eye, 1.0) - std::log(1 + std::exp(-1.0))) < 1e-15);
  CHECK(std::abs(info_nce(eye, eye, 1.0) - 0.3133) < 1e-4);

  CHECK_THROWS_AS(info_nce(eye, eye, 0.0), ValidationError);
  CHECK_THROWS_AS(info_nce(eye, Tensor::matrix(3, 2), 1.0), ShapeError);
  CHECK_THROWS_AS(info_nce(eye, Tensor::of_rows({{1, 0}, {0, 0}}), 1.0), DegenerateInputError);
}

TEST_CASE("info_nce lower bound") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = random_matrix(6, 4, rng), p = random_matrix(6, 4, rng);
    const double tau = 0.05;
    double bound = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      const double s_ii = cosine(a.row_vector(i), p.row_vector(i));
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < 6; ++j) {
        worst = std::max(worst, cosine(a.row_vector(i), p.row_vector(j)) - s_ii);
      }
      bound -= worst / tau;
    }
    CHECK(info_nce(a, p, tau) >= bound / 6 - 1e-12);
  }
}

TEST_CASE("sifter_loss composition") {
  Rng rng(4);
  const Tensor hx = random_matrix(5, 4, rng), hy = random_matrix(5, 4, rng),
               hz = random_matrix(5, 4, rng);
  CHECK(sifter_loss(hx, hy, hz, {1, 0, 0, 0.05}) == info_nce(hx, hy, 0.05));
  CHECK(sifter_loss(hx, hy, hz, {0, 1, 0, 0.05}) == info_nce(hx, hz, 0.05));
  CHECK(sifter_loss(hx, hy, hz, {0, 0, 1, 0.05}) == info_nce(hy, hz, 0.05));

  Tensor ortho = Tensor::matrix(4, 4);
  for (std::size_t i = 0; i < 4; ++i) ortho.at(i, i) = 1.0;
  const double per_term = std::log1p(3.0 * std::exp(-1.0 / 0.05));
  CHECK(std::abs(sifter_loss(ortho, ortho, ortho, {1, 1, 1, 0.05}) - 3 * per_term) < 1e-15);
  Tensor flat = Tensor::matrix(4, 4, 0.5);
  CHECK(std::abs(sifter_loss(flat, flat, flat, {1, 1, 1, 0.05}) - 3 * std::log(4.0)) < 1e-12);

  // Linear in the weights.
  const double lxy = info_nce(hx, hy, 0.1), lxz = info_nce(hx, hz, 0.1), lyz = info_nce(hy, hz, 0.1);
  const double combined = sifter_loss(hx, hy, hz, {0.5, 2.0, 1.5, 0.1});
  CHECK(std::abs(combined - (0.5 * lxy + 2.0 * lxz + 1.5 * lyz)) < 1e-12);

  const double base = sifter_loss(hx, hy, hz, {1, 1, 1, 0.05});
  CHECK(std::abs(sifter_loss(scale(hx, 3.7), hy, scale(hz, 0.2), {1, 1, 1, 0.05}) - base) < 1e-10);

  std::vector<std::size_t> order(5);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(5);
  shuffle.shuffle(order);
  const double permuted = sifter_loss(permute_rows(hx, order), permute_rows(hy, order),
                                      permute_rows(hz, order), {1, 1, 1, 0.05});
  CHECK(std::abs(permuted - base) < 1e-10);

  CHECK_THROWS_AS(sifter_loss(hx, hy, hz, {-1, 1, 1, 0.05}), ValidationError);
  CHECK_THROWS_AS(sifter_loss(hx, hy, hz, {0, 0, 0, 0.05}), ValidationError);
}

TEST_CASE("sifter_loss gradient") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    Tensor hx = random_matrix(4, 3, rng), hy = random_matrix(4, 3, rng), hz = random_matrix(4, 3, rng);
    const LossWeights w{1.0, 0.5, 0.25, 0.5};
    SifterLoss g = sifter_loss_with_grad(hx, hy, hz, w);
    CHECK(g.loss == sifter_loss(hx, hy, hz, w));
    const GradReport report = gradcheck([&] { return sifter_loss(hx, hy, hz, w); },
                                        {{"hx", &hx}, {"hy", &hy}, {"hz", &hz}},
                                        {{"hx", &g.grad_x}, {"hy", &g.grad_y}, {"hz", &g.grad_z}});
    CHECK(report.passed);
  }
}

TEST_CASE("encode") {
  for (Pooling pooling : {Pooling::mean, Pooling::lstm}) {
    CAPTURE(to_string(pooling));
    Rng init(6);
    const Encoder enc = Encoder::init(10, 6, pooling, 5, 0.15, init);
    const std::vector<std::size_t> ids = {1, 4, 2, 7};
    Rng r1(1), r2(2);
    CHECK(encode(enc, ids, false, r1) == encode(enc, ids, false, r2));
    CHECK(encode(enc, ids, true, r1) != encode(enc, ids, true, r1));
    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(encode(enc, none, false, r1), ValidationError);
  }

  Rng init(7);
  Encoder enc = Encoder::init(5, 4, Pooling::mean, 4, 0.0, init);
  const std::vector<std::size_t> single = {3};
  Rng rng(0);
  CHECK(encode(enc, single, false, rng) == enc.embedding.row_vector(3));
  const Tensor projected = tanh(add(matmul(enc.head_weight, enc.embedding.row_vector(3)), enc.head_bias));
  const Tensor trained = encode(enc, single, true, rng);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(trained[j] - projected[j]) < 1e-15);
  CHECK(to_string(parse_pooling("lstm")) == "lstm");
  CHECK_THROWS_AS(parse_pooling("max"), ValidationError);
}

TEST_CASE("contrastive training") {
  Rng data_rng(8);
  const auto triples = toy_triples(40, 20, data_rng);
  const auto dev = toy_dev(triples);
  Rng init(9);
  const Encoder enc = Encoder::init(20, 8, Pooling::mean, 8, 0.15, init);
  ContrastiveTrainConfig config;
  config.optimizer.learning_rate = 1e-2;
  config.batch_size = 8;
  config.validation_interval = 3;
  config.epochs = 2;
  config.seed = 3;

  const ContrastiveRun run = train_contrastive(enc, triples, dev, config);
  CHECK(run.steps == 10);
  CHECK(run.history.front().step == 0);
  CHECK(std::isnan(run.history.front().loss));
  CHECK(run.history.back().step == 10);
  CHECK(run.step_losses.size() == 10);
  for (const auto& row : run.history) CHECK(row.dev_spearman <= run.best_spearman);

  const ContrastiveRun again = train_contrastive(enc, triples, dev, config);
  CHECK(again.step_losses == run.step_losses);
  CHECK(again.best_step == run.best_step);

  ContrastiveTrainConfig idle = config;
  idle.max_steps = 0;
  const ContrastiveRun none = train_contrastive(enc, triples, dev, idle);
  CHECK(none.steps == 0);
  CHECK(none.best.embedding == enc.embedding);
  CHECK(none.best_spearman == none.init_spearman);

  CHECK_THROWS_AS(train_contrastive(enc, {}, dev, config), ValidationError);
  CHECK_THROWS_AS(train_contrastive(enc, triples, {}, config), ValidationError);
}
