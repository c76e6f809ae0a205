#include "sifter/recurrent.hpp"

#include <cmath>

#include "sifter/error.hpp"

namespace sifter {
namespace {

// W·x + U·h + b
Tensor affine(const Tensor& w, const Tensor& x, const Tensor& u, const Tensor& h,
              const Tensor& b) {
  const std::size_t n = w.rows();
  const std::size_t d_in = w.cols();
  const std::size_t d_h = u.cols();
  Tensor z = Tensor::vector(n);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d_in; ++j) acc += w[r * d_in + j] * x[j];
    for (std::size_t j = 0; j < d_h; ++j) acc += u[r * d_h + j] * h[j];
    z[r] = acc + b[r];
  }
  return z;
}

// grad += Aᵀ·v without allocating.
void accumulate_transposed(const Tensor& a, const Tensor& v, Tensor& grad) {
  const std::size_t m = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) grad[j] += a[r * m + j] * vr;
  }
}

void check_input(const LstmParams& params, const Tensor& x, const CellState& prev) {
  if (x.size() != params.input_dim()) {
    throw ShapeError("LSTM input has " + x.shape_string() + ", expected (" +
                     std::to_string(params.input_dim()) + ")");
  }
  if (prev.h.size() != params.hidden_dim() || prev.c.size() != params.hidden_dim()) {
    throw ShapeError("LSTM state has h " + prev.h.shape_string() + ", c " +
                     prev.c.shape_string() + ", expected (" +
                     std::to_string(params.hidden_dim()) + ")");
  }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams p;
  for (Tensor* w : {&p.w_f, &p.w_i, &p.w_o, &p.w_c}) *w = Tensor::matrix(hidden_dim, input_dim);
  for (Tensor* u : {&p.u_f, &p.u_i, &p.u_o, &p.u_c}) *u = Tensor::matrix(hidden_dim, hidden_dim);
  for (Tensor* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_c}) *b = Tensor::vector(hidden_dim);
  return p;
}

LstmParams LstmParams::uniform_init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmParams p = zeros(input_dim, hidden_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (auto& ref : p.refs()) {
    for (double& x : ref.tensor->data()) x = rng.uniform(-bound, bound);
  }
  return p;
}

void LstmParams::validate() const {
  const std::size_t d_h = hidden_dim();
  const std::size_t d_in = input_dim();
  for (const Tensor* w : {&w_f, &w_i, &w_o, &w_c}) {
    if (w->rank() != 2 || w->rows() != d_h || w->cols() != d_in)
      throw ShapeError("LSTM input weight has shape " + w->shape_string());
  }
  for (const Tensor* u : {&u_f, &u_i, &u_o, &u_c}) {
    if (u->rank() != 2 || u->rows() != d_h || u->cols() != d_h)
      throw ShapeError("LSTM recurrent weight has shape " + u->shape_string());
  }
  for (const Tensor* b : {&b_f, &b_i, &b_o, &b_c}) {
    if (b->rank() != 1 || b->size() != d_h)
      throw ShapeError("LSTM bias has shape " + b->shape_string());
  }
}

TensorRefs LstmParams::refs(const std::string& prefix) {
  return {
      {prefix + "w_f", &w_f}, {prefix + "w_i", &w_i}, {prefix + "w_o", &w_o},
      {prefix + "w_c", &w_c}, {prefix + "u_f", &u_f}, {prefix + "u_i", &u_i},
      {prefix + "u_o", &u_o}, {prefix + "u_c", &u_c}, {prefix + "b_f", &b_f},
      {prefix + "b_i", &b_i}, {prefix + "b_o", &b_o}, {prefix + "b_c", &b_c},
  };
}

CellState CellState::zeros(std::size_t hidden_dim) {
  return {Tensor::vector(hidden_dim), Tensor::vector(hidden_dim)};
}

StepResult cell_step(const LstmParams& params, const Tensor& x, const CellState& prev,
                     bool short_circuit) {
  check_input(params, x, prev);
  StepCache s;
  s.x = x;
  s.h_prev = prev.h;
  s.c_prev = prev.c;
  s.short_circuit = short_circuit;
  s.z_f = affine(params.w_f, x, params.u_f, prev.h, params.b_f);
  s.z_i = affine(params.w_i, x, params.u_i, prev.h, params.b_i);
  s.z_o = affine(params.w_o, x, params.u_o, prev.h, params.b_o);
  s.z_c = affine(params.w_c, x, params.u_c, prev.h, params.b_c);
  s.f = sigmoid(s.z_f);
  s.i = sigmoid(s.z_i);
  s.o = sigmoid(s.z_o);
  s.c_plus = tanh(s.z_c);

  const std::size_t d_h = params.hidden_dim();
  s.c = Tensor::vector(d_h);
  for (std::size_t j = 0; j < d_h; ++j) {
    const double written = short_circuit ? s.c_plus[j] : s.i[j] * s.c_plus[j];
    s.c[j] = s.f[j] * prev.c[j] + written;
  }
  s.tanh_c = tanh(s.c);
  s.h = hadamard(s.o, s.tanh_c);

  StepResult out;
  out.state = {s.h, s.c};
  out.cache = std::move(s);
  return out;
}

StepResult lstm_step(const LstmParams& params, const Tensor& x, const CellState& prev) {
  return cell_step(params, x, prev, false);
}

StepResult sifter_step(const LstmParams& params, const Tensor& x, std::string_view token,
                       const CellState& prev, const Lexicon& lexicon) {
  return cell_step(params, x, prev, lexicon.contains(token));
}

SequenceOutput sequence_forward(const LstmParams& params, const Tensor& embeddings,
                                std::span<const std::string> tokens, const Lexicon* lexicon,
                                const SequenceDropout& dropout, Rng& rng, bool train_mode) {
  const std::size_t steps = embeddings.rows();
  if (steps == 0) throw ValidationError("sequence_forward: empty sequence");
  if (embeddings.rank() != 2 || embeddings.cols() != params.input_dim()) {
    throw ShapeError("sequence_forward: embeddings " + embeddings.shape_string() +
                     " do not match input dim " + std::to_string(params.input_dim()));
  }
  if (lexicon != nullptr && tokens.size() != steps) {
    throw ValidationError("sequence_forward: " + std::to_string(tokens.size()) +
                          " tokens for " + std::to_string(steps) + " embeddings");
  }
  check_dropout_rate(dropout.embedding);
  check_dropout_rate(dropout.output);

  SequenceOutput out;
  SequenceCache& cache = out.cache;
  cache.input_dim = params.input_dim();
  cache.hidden_dim = params.hidden_dim();
  cache.embedding_mask = train_mode ? DropoutMask::sample(embeddings, dropout.embedding, rng)
                                    : DropoutMask::identity(embeddings);
  const Tensor inputs = cache.embedding_mask.apply(embeddings);

  out.hidden = Tensor::matrix(steps, params.hidden_dim());
  CellState state = CellState::zeros(params.hidden_dim());
  for (std::size_t t = 0; t < steps; ++t) {
    const bool in_lexicon = lexicon != nullptr && lexicon->contains(tokens[t]);
    StepResult r = cell_step(params, inputs.row_vector(t), state, in_lexicon);
    out.hidden.set_row(t, r.state.h);
    state = std::move(r.state);
    if (train_mode) cache.steps.push_back(std::move(r.cache));
  }
  cache.output_mask = train_mode ? DropoutMask::sample(state.h, dropout.output, rng)
                                 : DropoutMask::identity(state.h);
  out.output = cache.output_mask.apply(state.h);
  return out;
}

void sequence_backward_into(const LstmParams& params, const SequenceCache& cache,
                            const Tensor& grad_output, SequenceGrads& grads) {
  const std::size_t d_h = params.hidden_dim();
  if (cache.steps.empty()) {
    throw ValidationError("sequence_backward: cache is empty (forward ran in eval mode?)");
  }
  if (cache.hidden_dim != d_h || cache.input_dim != params.input_dim()) {
    throw ShapeError("sequence_backward: cache was built for different parameter shapes");
  }
  if (grad_output.size() != d_h) {
    throw ShapeError("sequence_backward: upstream gradient " + grad_output.shape_string() +
                     " does not match hidden dim " + std::to_string(d_h));
  }
  const std::size_t steps = cache.steps.size();
  if (grads.embeddings.rows() != steps || grads.embeddings.cols() != params.input_dim()) {
    throw ShapeError("sequence_backward: embedding gradient buffer has shape " +
                     grads.embeddings.shape_string());
  }

  Tensor dh = cache.output_mask.apply(grad_output);
  Tensor dc = Tensor::vector(d_h);
  Tensor dz_f = Tensor::vector(d_h), dz_i = Tensor::vector(d_h);
  Tensor dz_o = Tensor::vector(d_h), dz_c = Tensor::vector(d_h);
  LstmParams& g = grads.params;

  for (std::size_t t = steps; t-- > 0;) {
    const StepCache& s = cache.steps[t];
    for (std::size_t j = 0; j < d_h; ++j) {
      const double o = s.o[j];
      const double tc = s.tanh_c[j];
      dz_o[j] = dh[j] * tc * o * (1.0 - o);
      dc[j] += dh[j] * o * (1.0 - tc * tc);
      const double gate = s.short_circuit ? 1.0 : s.i[j];
      dz_c[j] = dc[j] * gate * (1.0 - s.c_plus[j] * s.c_plus[j]);
      dz_i[j] = s.short_circuit ? 0.0 : dc[j] * s.c_plus[j] * s.i[j] * (1.0 - s.i[j]);
      dz_f[j] = dc[j] * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
    }

    add_outer(g.w_f, dz_f, s.x);
    add_outer(g.w_o, dz_o, s.x);
    add_outer(g.w_c, dz_c, s.x);
    add_outer(g.u_f, dz_f, s.h_prev);
    add_outer(g.u_o, dz_o, s.h_prev);
    add_outer(g.u_c, dz_c, s.h_prev);
    add_inplace(g.b_f, dz_f);
    add_inplace(g.b_o, dz_o);
    add_inplace(g.b_c, dz_c);
    if (!s.short_circuit) {
      add_outer(g.w_i, dz_i, s.x);
      add_outer(g.u_i, dz_i, s.h_prev);
      add_inplace(g.b_i, dz_i);
    }

    Tensor dx = Tensor::vector(params.input_dim());
    accumulate_transposed(params.w_f, dz_f, dx);
    accumulate_transposed(params.w_i, dz_i, dx);
    accumulate_transposed(params.w_o, dz_o, dx);
    accumulate_transposed(params.w_c, dz_c, dx);
    for (std::size_t j = 0; j < dx.size(); ++j) {
      grads.embeddings.at(t, j) += dx[j] * cache.embedding_mask.mask.at(t, j);
    }

    Tensor dh_prev = Tensor::vector(d_h);
    accumulate_transposed(params.u_f, dz_f, dh_prev);
    accumulate_transposed(params.u_i, dz_i, dh_prev);
    accumulate_transposed(params.u_o, dz_o, dh_prev);
    accumulate_transposed(params.u_c, dz_c, dh_prev);
    dh = std::move(dh_prev);
    for (std::size_t j = 0; j < d_h; ++j) dc[j] *= s.f[j];
  }
}

SequenceGrads sequence_backward(const LstmParams& params, const SequenceCache& cache,
                                const Tensor& grad_output) {
  SequenceGrads grads{LstmParams::zeros(params.input_dim(), params.hidden_dim()),
                      Tensor::matrix(cache.steps.size(), params.input_dim())};
  sequence_backward_into(params, cache, grad_output, grads);
  return grads;
}

}  // namespace sifter
