#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sifter/error.hpp"
#include "sifter/recurrent.hpp"

using namespace sifter;

namespace {

Tensor random_tensor(std::vector<std::size_t> dims, Rng& rng, double scale = 1.0) {
  Tensor t = dims.size() == 1 ? Tensor::vector(dims[0]) : Tensor::matrix(dims[0], dims[1]);
  for (double& x : t.data()) x = rng.uniform(-scale, scale);
  return t;
}

struct Fixture {
  LstmParams params;
  Tensor embeddings;
  std::vector<std::string> tokens;
  Tensor readout;  // loss = readout · h_T

  Fixture(std::uint64_t seed, std::size_t d_in = 5, std::size_t d_h = 4, std::size_t length = 6) {
    Rng rng(seed);
    params = LstmParams::uniform_init(d_in, d_h, rng);
    embeddings = random_tensor({length, d_in}, rng);
    readout = random_tensor({d_h}, rng);
    for (std::size_t t = 0; t < length; ++t) tokens.push_back(t % 2 ? "and" : "w" + std::to_string(t));
  }
};

double run_loss(const Fixture& f, const Lexicon* lexicon, std::uint64_t mask_seed,
                const SequenceDropout& drop) {
  Rng rng(mask_seed);
  const SequenceOutput out = sequence_forward(f.params, f.embeddings, f.tokens, lexicon, drop, rng, true);
  return dot(f.readout, out.output);
}

}  // namespace

TEST_CASE("lstm_step with zero parameters") {
  const LstmParams p = LstmParams::zeros(3, 2);
  const StepResult r = lstm_step(p, Tensor::of({1.5, -2.0, 0.3}), CellState::zeros(2));
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(r.cache.f[j] == 0.5);
    CHECK(r.cache.i[j] == 0.5);
    CHECK(r.cache.o[j] == 0.5);
    CHECK(r.cache.c_plus[j] == 0.0);
    CHECK(r.state.c[j] == 0.0);
    CHECK(r.state.h[j] == 0.0);
  }

  CellState prev = CellState::zeros(2);
  prev.c = Tensor::of({0.8, -3.0});
  const StepResult s = lstm_step(p, Tensor::of({1, 1, 1}), prev);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(s.state.c[j] == 0.5 * prev.c[j]);
    CHECK(std::abs(s.state.h[j] - 0.5 * std::tanh(0.5 * prev.c[j])) < 1e-15);
  }

  CHECK_THROWS_AS(lstm_step(p, Tensor::of({1, 1}), CellState::zeros(2)), ShapeError);
}

TEST_CASE("hidden values stay inside (-1, 1)") {
  Rng rng(21);
  const LstmParams p = LstmParams::uniform_init(3, 4, rng);
  CellState state = CellState::zeros(4);
  for (int t = 0; t < 50; ++t) {
    state = lstm_step(p, random_tensor({3}, rng, 10.0), state).state;
    for (double h : state.h.data()) CHECK(std::abs(h) < 1.0);
  }
}

TEST_CASE("uniform init range") {
  Rng rng(2);
  LstmParams p = LstmParams::uniform_init(7, 16, rng);
  const double bound = 1.0 / std::sqrt(16.0);
  for (const auto& ref : p.refs()) {
    for (double x : ref.tensor->data()) CHECK(std::abs(x) <= bound);
  }
  CHECK(p.refs().size() == 12);
}

TEST_CASE("sifter_step") {
  Rng rng(4);
  const LstmParams p = LstmParams::uniform_init(3, 4, rng);
  const Tensor x = random_tensor({3}, rng);
  CellState prev{random_tensor({4}, rng), random_tensor({4}, rng)};
  const Lexicon empty;
  const Lexicon lex("deletion", {"because"});

  const StepResult plain = lstm_step(p, x, prev);
  CHECK(sifter_step(p, x, "because", prev, empty).state.c == plain.state.c);
  CHECK(sifter_step(p, x, "because", prev, empty).state.h == plain.state.h);
  CHECK(sifter_step(p, x, "apple", prev, lex).state.c == plain.state.c);

  // Closed input gate: the standard cell keeps only f⊙c_prev, the gated one
  // still writes the candidate.
  LstmParams closed = p;
  for (double& b : closed.b_i.data()) b = -1e6;
  const StepResult standard = lstm_step(closed, x, prev);
  const StepResult gated = sifter_step(closed, x, "Because", prev, lex);
  CHECK(gated.cache.short_circuit);
  for (std::size_t j = 0; j < 4; ++j) {
    const double kept = standard.cache.f[j] * prev.c[j];
    CHECK(std::abs(standard.state.c[j] - kept) < 1e-12);
    CHECK(gated.state.c[j] == kept + gated.cache.c_plus[j]);
    CHECK(std::abs(gated.state.c[j] - standard.state.c[j] - gated.cache.c_plus[j]) < 1e-12);
    CHECK(gated.cache.i[j] == standard.cache.i[j]);
  }

  const LstmParams zero = LstmParams::zeros(3, 4);
  const StepResult z = sifter_step(zero, x, "because", prev, lex);
  for (std::size_t j = 0; j < 4; ++j) CHECK(z.state.c[j] == 0.5 * prev.c[j]);
}

TEST_CASE("sequence_forward") {
  Fixture f(6);
  const Lexicon lex("x", {"and"});
  Rng rng(1);

  SUBCASE("single step") {
    const Tensor one = Tensor::from_data({1, 5}, std::vector<double>(f.embeddings.data().begin(), f.embeddings.data().begin() + 5));
    const SequenceOutput out = sequence_forward(f.params, one, {}, nullptr, {}, rng, false);
    const StepResult step = lstm_step(f.params, f.embeddings.row_vector(0), CellState::zeros(4));
    CHECK(out.output == step.state.h);
    CHECK(out.hidden.row_vector(0) == step.state.h);
  }
  SUBCASE("eval mode has no dropout and no cache") {
    const SequenceDropout drop{0.5, 0.5};
    const SequenceOutput a = sequence_forward(f.params, f.embeddings, f.tokens, &lex, drop, rng, false);
    const SequenceOutput b = sequence_forward(f.params, f.embeddings, f.tokens, &lex, {}, rng, false);
    CHECK(a.output == b.output);
    CHECK(a.cache.steps.empty());
  }
  SUBCASE("fixed seed is deterministic") {
    const SequenceDropout drop{0.3, 0.3};
    Rng r1(9), r2(9);
    const SequenceOutput a = sequence_forward(f.params, f.embeddings, f.tokens, &lex, drop, r1, true);
    const SequenceOutput b = sequence_forward(f.params, f.embeddings, f.tokens, &lex, drop, r2, true);
    CHECK(a.hidden == b.hidden);
    CHECK(a.output == b.output);
    CHECK(a.cache.steps.size() == f.tokens.size());
  }
  SUBCASE("empty sequence") {
    CHECK_THROWS_AS(sequence_forward(f.params, Tensor::matrix(0, 5), {}, nullptr, {}, rng, false),
                    ValidationError);
  }
}

TEST_CASE("cached gates and short-circuit identity") {
  Fixture f(8);
  const Lexicon lex("x", {"and"});
  Rng rng(0);
  const SequenceOutput out = sequence_forward(f.params, f.embeddings, f.tokens, &lex, {}, rng, true);
  for (const StepCache& s : out.cache.steps) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(s.f[j] > 0.0);
      CHECK(s.f[j] < 1.0);
      CHECK(s.i[j] > 0.0);
      CHECK(s.i[j] < 1.0);
      CHECK(s.o[j] > 0.0);
      CHECK(s.o[j] < 1.0);
      CHECK(std::abs(s.c_plus[j]) < 1.0);
      if (s.short_circuit) CHECK(s.c[j] == s.f[j] * s.c_prev[j] + s.c_plus[j]);
    }
  }
  std::size_t members = 0;
  for (const StepCache& s : out.cache.steps) members += s.short_circuit;
  CHECK(members == 3);
}

TEST_CASE("empty lexicon is bit-identical to the standard cell") {
  Fixture f(10);
  const Lexicon empty;
  const SequenceDropout drop{0.2, 0.2};
  Rng r1(5), r2(5);
  const SequenceOutput a = sequence_forward(f.params, f.embeddings, f.tokens, &empty, drop, r1, true);
  const SequenceOutput b = sequence_forward(f.params, f.embeddings, f.tokens, nullptr, drop, r2, true);
  CHECK(a.hidden == b.hidden);
  CHECK(a.output == b.output);
  const SequenceGrads ga = sequence_backward(f.params, a.cache, f.readout);
  const SequenceGrads gb = sequence_backward(f.params, b.cache, f.readout);
  CHECK(ga.embeddings == gb.embeddings);
  LstmParams pa = ga.params, pb = gb.params;
  const TensorRefs ra = pa.refs(), rb = pb.refs();
  for (std::size_t k = 0; k < ra.size(); ++k) CHECK(*ra[k].tensor == *rb[k].tensor);
}

TEST_CASE("sequence_backward") {
  SUBCASE("input gate gets no gradient when every token is a member") {
    Fixture f(12);
    Lexicon all("all", {});
    for (const auto& t : f.tokens) all.insert(t);
    Rng rng(3);
    const SequenceOutput out = sequence_forward(f.params, f.embeddings, f.tokens, &all, {}, rng, true);
    const SequenceGrads g = sequence_backward(f.params, out.cache, f.readout);
    CHECK(g.params.w_i == Tensor::matrix(4, 5));
    CHECK(g.params.u_i == Tensor::matrix(4, 4));
    CHECK(g.params.b_i == Tensor::vector(4));
    CHECK(g.params.w_f != Tensor::matrix(4, 5));

    // Perturbing the input-gate weights cannot move the loss.
    Fixture moved = f;
    for (double& x : moved.params.w_i.data()) x += 3.0;
    for (double& x : moved.params.b_i.data()) x -= 2.0;
    CHECK(run_loss(moved, &all, 1, {}) == run_loss(f, &all, 1, {}));
  }
  SUBCASE("zero upstream gradient") {
    Fixture f(13);
    Rng rng(3);
    const SequenceOutput out = sequence_forward(f.params, f.embeddings, f.tokens, nullptr, {}, rng, true);
    SequenceGrads g = sequence_backward(f.params, out.cache, Tensor::vector(4));
    CHECK(g.embeddings == Tensor::matrix(6, 5));
    for (const auto& ref : g.params.refs()) {
      for (double x : ref.tensor->data()) CHECK(x == 0.0);
    }
  }
  SUBCASE("mismatched cache") {
    Fixture f(14);
    Rng rng(3);
    const SequenceOutput out = sequence_forward(f.params, f.embeddings, f.tokens, nullptr, {}, rng, true);
    const LstmParams other = LstmParams::zeros(5, 3);
    CHECK_THROWS_AS(sequence_backward(other, out.cache, Tensor::vector(3)), ShapeError);
    CHECK_THROWS_AS(sequence_backward(f.params, out.cache, Tensor::vector(3)), ShapeError);
  }
}

TEST_CASE("finite-difference check of both cells") {
  const Lexicon lex("mixed", {"and", "w2"});
  const SequenceDropout drop{0.2, 0.2};
  for (const Lexicon* lexicon : {static_cast<const Lexicon*>(nullptr), &lex}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      CAPTURE(seed);
      Fixture f(100 + seed);
      Rng rng(seed);
      const SequenceOutput out =
          sequence_forward(f.params, f.embeddings, f.tokens, lexicon, drop, rng, true);
      SequenceGrads g = sequence_backward(f.params, out.cache, f.readout);
      TensorRefs params = f.params.refs();
      params.push_back({"embeddings", &f.embeddings});
      TensorRefs grads = g.params.refs();
      grads.push_back({"embeddings", &g.embeddings});
      const GradReport report =
          gradcheck([&] { return run_loss(f, lexicon, seed, drop); }, params, grads);
      CHECK(report.passed);
      CHECK(report.max_rel_error < 1e-4);
    }
  }
}
