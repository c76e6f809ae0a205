#include "sifter/contrastive.hpp"

#include <cmath>
#include <limits>

#include "sifter/classify.hpp"
#include "sifter/error.hpp"

namespace sifter {

double cosine(const Tensor& u, const Tensor& v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine: shape mismatch " + u.shape_string() + " vs " + v.shape_string());
  }
  return dot(l2_normalize(u), l2_normalize(v));
}

namespace {

struct NormalizedRows {
  Tensor unit;   // rows scaled to unit length
  std::vector<double> norms;
};

NormalizedRows normalize_rows(const Tensor& m) {
  NormalizedRows out{m, std::vector<double>(m.rows())};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = out.unit.row(r);
    double ss = 0.0;
    for (double x : row) ss += x * x;
    const double n = std::sqrt(ss);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw DegenerateInputError("info_nce: row " + std::to_string(r) +
                                 " has zero or non-finite norm");
    }
    out.norms[r] = n;
    for (double& x : row) x /= n;
  }
  return out;
}

void check_pair(const Tensor& anchors, const Tensor& positives, double temperature) {
  if (anchors.rank() != 2 || !anchors.same_shape(positives)) {
    throw ShapeError("info_nce: anchors " + anchors.shape_string() + " and positives " +
                     positives.shape_string() + " must be matching N x d matrices");
  }
  if (anchors.rows() == 0) throw ValidationError("info_nce: empty batch");
  if (!(temperature > 0.0)) {
    throw ValidationError("temperature must be positive, got " + std::to_string(temperature));
  }
}

// Backpropagates through row normalization: dA = (g - a(a·g)) / ‖A‖.
Tensor unnormalize_grad(const NormalizedRows& rows, const Tensor& grad_unit) {
  Tensor out = grad_unit;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto a = rows.unit.row(r);
    auto g = out.row(r);
    double ag = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) ag += a[j] * g[j];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = (g[j] - a[j] * ag) / rows.norms[r];
  }
  return out;
}

InfoNce info_nce_impl(const Tensor& anchors, const Tensor& positives, double temperature,
                      bool with_grad) {
  check_pair(anchors, positives, temperature);
  const std::size_t n = anchors.rows();
  const std::size_t d = anchors.cols();
  const NormalizedRows a = normalize_rows(anchors);
  const NormalizedRows p = normalize_rows(positives);

  Tensor logits = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += a.unit.at(i, k) * p.unit.at(j, k);
      logits.at(i, j) = s / temperature;
    }
  }

  InfoNce out;
  Tensor coeff = Tensor::matrix(n, n);  // dLoss/dlogits
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    double peak = row[0];
    for (double s : row) peak = std::max(peak, s);
    double total = 0.0;
    for (double s : row) total += std::exp(s - peak);
    const double lse = peak + std::log(total);
    out.loss += lse - row[i];
    if (with_grad) {
      for (std::size_t j = 0; j < n; ++j) {
        coeff.at(i, j) = (std::exp(row[j] - lse) - (i == j ? 1.0 : 0.0)) * inv_n;
      }
    }
  }
  out.loss *= inv_n;
  if (!std::isfinite(out.loss)) throw NumericError("info_nce: loss is not finite");
  if (!with_grad) return out;

  Tensor grad_a = Tensor::matrix(n, d);
  Tensor grad_p = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = coeff.at(i, j) / temperature;
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        grad_a.at(i, k) += c * p.unit.at(j, k);
        grad_p.at(j, k) += c * a.unit.at(i, k);
      }
    }
  }
  out.grad_anchors = unnormalize_grad(a, grad_a);
  out.grad_positives = unnormalize_grad(p, grad_p);
  return out;
}

}  // namespace

double info_nce(const Tensor& anchors, const Tensor& positives, double temperature) {
  return info_nce_impl(anchors, positives, temperature, false).loss;
}

InfoNce info_nce_with_grad(const Tensor& anchors, const Tensor& positives, double temperature) {
  return info_nce_impl(anchors, positives, temperature, true);
}

void LossWeights::validate() const {
  if (xy < 0.0 || xz < 0.0 || yz < 0.0) {
    throw ValidationError("loss weights must be nonnegative");
  }
  if (!(xy > 0.0 || xz > 0.0 || yz > 0.0)) {
    throw ValidationError("at least one loss weight must be positive");
  }
  if (!(temperature > 0.0)) {
    throw ValidationError("temperature must be positive, got " + std::to_string(temperature));
  }
}

namespace {

SifterLoss sifter_loss_impl(const Tensor& hx, const Tensor& hy, const Tensor& hz,
                            const LossWeights& w, bool with_grad) {
  w.validate();
  if (!hx.same_shape(hy) || !hx.same_shape(hz)) {
    throw ShapeError("sifter_loss: views have shapes " + hx.shape_string() + ", " +
                     hy.shape_string() + ", " + hz.shape_string());
  }
  SifterLoss out;
  if (with_grad) {
    out.grad_x = Tensor::matrix(hx.rows(), hx.cols());
    out.grad_y = out.grad_x;
    out.grad_z = out.grad_x;
  }
  auto term = [&](double weight, const Tensor& a, const Tensor& b, Tensor* ga, Tensor* gb,
                  double& value) {
    if (weight == 0.0) return;
    InfoNce r = info_nce_impl(a, b, w.temperature, with_grad);
    value = r.loss;
    out.loss += weight * r.loss;
    if (with_grad) {
      axpy(weight, r.grad_anchors, *ga);
      axpy(weight, r.grad_positives, *gb);
    }
  };
  term(w.xy, hx, hy, &out.grad_x, &out.grad_y, out.term_xy);
  term(w.xz, hx, hz, &out.grad_x, &out.grad_z, out.term_xz);
  term(w.yz, hy, hz, &out.grad_y, &out.grad_z, out.term_yz);
  return out;
}

}  // namespace

double sifter_loss(const Tensor& hx, const Tensor& hy, const Tensor& hz,
                   const LossWeights& weights) {
  return sifter_loss_impl(hx, hy, hz, weights, false).loss;
}

SifterLoss sifter_loss_with_grad(const Tensor& hx, const Tensor& hy, const Tensor& hz,
                                 const LossWeights& weights) {
  return sifter_loss_impl(hx, hy, hz, weights, true);
}

std::string to_string(Pooling p) { return p == Pooling::lstm ? "lstm" : "mean"; }

Pooling parse_pooling(const std::string& text) {
  if (text == "mean") return Pooling::mean;
  if (text == "lstm") return Pooling::lstm;
  throw ValidationError("unknown pooling mode '" + text + "' (expected mean|lstm)");
}

Encoder Encoder::init(std::size_t vocab_size, std::size_t embed_dim, Pooling pooling,
                      std::size_t hidden_dim, double dropout, Rng& rng) {
  check_dropout_rate(dropout);
  if (vocab_size == 0 || embed_dim == 0) {
    throw ValidationError("encoder needs a nonempty vocabulary and embedding size");
  }
  Encoder e;
  e.pooling = pooling;
  e.dropout = dropout;
  Rng embed_rng = rng.fork(1);
  Rng lstm_rng = rng.fork(2);
  Rng head_rng = rng.fork(3);
  e.embedding = Tensor::matrix(vocab_size, embed_dim);
  const double embed_bound = std::sqrt(3.0 / static_cast<double>(embed_dim));
  for (double& x : e.embedding.data()) x = embed_rng.uniform(-embed_bound, embed_bound);
  std::size_t out_dim = embed_dim;
  if (pooling == Pooling::lstm) {
    e.lstm = LstmParams::uniform_init(embed_dim, hidden_dim, lstm_rng);
    out_dim = hidden_dim;
  }
  e.head_weight = Tensor::matrix(out_dim, out_dim);
  e.head_bias = Tensor::vector(out_dim);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(out_dim));
  for (double& x : e.head_weight.data()) x = head_rng.uniform(-head_bound, head_bound);
  return e;
}

Encoder Encoder::zeros_like() const {
  Encoder g;
  g.pooling = pooling;
  g.dropout = dropout;
  g.embedding = Tensor::matrix(embedding.rows(), embedding.cols());
  if (pooling == Pooling::lstm) g.lstm = LstmParams::zeros(lstm.input_dim(), lstm.hidden_dim());
  g.head_weight = Tensor::matrix(head_weight.rows(), head_weight.cols());
  g.head_bias = Tensor::vector(head_bias.size());
  return g;
}

TensorRefs Encoder::refs() {
  TensorRefs out{{"embedding", &embedding}};
  if (pooling == Pooling::lstm) {
    for (auto& r : lstm.refs()) out.push_back(r);
  }
  out.push_back({"proj.w", &head_weight});
  out.push_back({"proj.b", &head_bias});
  return out;
}

Tensor encode(const Encoder& encoder, std::span<const std::size_t> ids, bool train_mode,
              Rng& rng, EncodeCache* cache) {
  if (ids.empty()) throw ValidationError("encode: empty sentence");
  const std::size_t d_e = encoder.embedding.cols();
  Tensor inputs = Tensor::matrix(ids.size(), d_e);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= encoder.embedding.rows()) {
      throw ValidationError("encode: token id " + std::to_string(ids[t]) +
                            " outside vocabulary of " + std::to_string(encoder.embedding.rows()));
    }
    auto src = encoder.embedding.row(ids[t]);
    std::copy(src.begin(), src.end(), inputs.row(t).begin());
  }

  Tensor pooled;
  if (encoder.pooling == Pooling::mean) {
    DropoutMask mask = train_mode ? DropoutMask::sample(inputs, encoder.dropout, rng)
                                  : DropoutMask::identity(inputs);
    const Tensor dropped = mask.apply(inputs);
    pooled = Tensor::vector(d_e);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      auto row = dropped.row(t);
      for (std::size_t j = 0; j < d_e; ++j) pooled[j] += row[j];
    }
    for (double& x : pooled.data()) x /= static_cast<double>(ids.size());
    if (cache != nullptr) cache->mask = std::move(mask);
  } else {
    SequenceOutput seq = sequence_forward(encoder.lstm, inputs, {}, nullptr,
                                          {encoder.dropout, 0.0}, rng, train_mode);
    pooled = seq.output;
    if (cache != nullptr) cache->sequence = std::move(seq.cache);
  }
  if (!train_mode) return pooled;

  Tensor projected = matmul(encoder.head_weight, pooled);
  add_inplace(projected, encoder.head_bias);
  projected = tanh(projected);
  if (cache != nullptr) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->pooled = pooled;
    cache->projected = projected;
  }
  return projected;
}

void encode_backward(const Encoder& encoder, const EncodeCache& cache, const Tensor& grad,
                     Encoder& grads) {
  if (cache.ids.empty()) {
    throw ValidationError("encode_backward: cache is empty (encoding ran in eval mode?)");
  }
  Tensor d_pre = grad;
  for (std::size_t j = 0; j < d_pre.size(); ++j) {
    d_pre[j] *= 1.0 - cache.projected[j] * cache.projected[j];
  }
  add_outer(grads.head_weight, d_pre, cache.pooled);
  add_inplace(grads.head_bias, d_pre);
  const Tensor d_pooled = matmul_transposed(encoder.head_weight, d_pre);

  const std::size_t steps = cache.ids.size();
  if (encoder.pooling == Pooling::mean) {
    const double inv_t = 1.0 / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      auto row = grads.embedding.row(cache.ids[t]);
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] += d_pooled[j] * inv_t * cache.mask.mask.at(t, j);
      }
    }
  } else {
    SequenceGrads sg{std::move(grads.lstm), Tensor::matrix(steps, encoder.embedding.cols())};
    sequence_backward_into(encoder.lstm, cache.sequence, d_pooled, sg);
    grads.lstm = std::move(sg.params);
    for (std::size_t t = 0; t < steps; ++t) {
      auto row = grads.embedding.row(cache.ids[t]);
      auto g = sg.embeddings.row(t);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += g[j];
    }
  }
}

double contrastive_batch_loss(const Encoder& encoder, std::span<const EncodedTriple* const> batch,
                              const LossWeights& weights, Rng& rng, Encoder* grads) {
  const std::size_t n = batch.size();
  if (n == 0) throw ValidationError("empty contrastive batch");
  const std::size_t d = encoder.output_dim();
  Tensor hx = Tensor::matrix(n, d), hy = Tensor::matrix(n, d), hz = Tensor::matrix(n, d);
  std::vector<EncodeCache> cx(n), cy(n), cz(n);
  for (std::size_t i = 0; i < n; ++i) {
    hx.set_row(i, encode(encoder, batch[i]->x, true, rng, &cx[i]));
    hy.set_row(i, encode(encoder, batch[i]->y_plus, true, rng, &cy[i]));
    hz.set_row(i, encode(encoder, batch[i]->z_plus, true, rng, &cz[i]));
  }
  if (grads == nullptr) return sifter_loss(hx, hy, hz, weights);

  SifterLoss loss = sifter_loss_with_grad(hx, hy, hz, weights);
  *grads = encoder.zeros_like();
  for (std::size_t i = 0; i < n; ++i) {
    encode_backward(encoder, cx[i], loss.grad_x.row_vector(i), *grads);
    encode_backward(encoder, cy[i], loss.grad_y.row_vector(i), *grads);
    encode_backward(encoder, cz[i], loss.grad_z.row_vector(i), *grads);
  }
  return loss.loss;
}

double mean_alignment(const Encoder& encoder, std::span<const EncodedTriple> triples,
                      std::size_t limit) {
  const std::size_t n = std::min(limit, triples.size());
  if (n == 0) throw ValidationError("mean_alignment: no triples");
  Rng unused(0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += cosine(encode(encoder, triples[i].x, false, unused),
                    encode(encoder, triples[i].y_plus, false, unused));
  }
  return total / static_cast<double>(n);
}

ContrastiveRun train_contrastive(const Encoder& init, std::span<const EncodedTriple> corpus,
                                 std::span<const EncodedPair> dev,
                                 const ContrastiveTrainConfig& config) {
  if (corpus.empty()) throw ValidationError("contrastive training needs a nonempty corpus");
  if (dev.empty()) throw ValidationError("contrastive training needs a nonempty dev set");
  if (config.batch_size == 0 || config.validation_interval == 0) {
    throw ValidationError("batch size and validation interval must be at least 1");
  }
  if (!(config.optimizer.learning_rate > 0.0)) {
    throw ValidationError("learning rate must be positive");
  }
  config.weights.validate();

  Encoder encoder = init;
  ContrastiveRun run;
  run.best = encoder;
  run.init_spearman = sts_eval(encoder, dev).value;
  run.best_spearman = run.init_spearman;
  run.alignment_init = mean_alignment(encoder, corpus, config.alignment_sample);
  run.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), run.init_spearman});

  const Rng root(config.seed);
  Rng dropout_rng = root.fork(11);
  AdamState optimizer(config.optimizer);
  Encoder grads = encoder.zeros_like();
  std::vector<std::size_t> order(corpus.size());
  double window_loss = 0.0;
  std::size_t window_steps = 0;
  std::size_t step = 0;
  bool evaluated_last = true;

  auto validate = [&]() {
    const double rho = sts_eval(encoder, dev).value;
    run.history.push_back({step, window_loss / static_cast<double>(window_steps), rho});
    window_loss = 0.0;
    window_steps = 0;
    evaluated_last = true;
    if (rho > run.best_spearman) {
      run.best_spearman = rho;
      run.best = encoder;
      run.best_step = step;
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps && step >= *config.max_steps) break;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = root.fork(1000 + epoch);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps && step >= *config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      // A single-row batch has no negatives and a constant zero loss.
      if (end - start < 2) continue;
      std::vector<const EncodedTriple*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&corpus[order[i]]);

      const double loss = contrastive_batch_loss(encoder, batch, config.weights, dropout_rng,
                                                 &grads);
      if (!std::isfinite(loss)) {
        throw NumericError("contrastive loss became non-finite at step " +
                           std::to_string(step + 1));
      }
      TensorRefs params = encoder.refs();
      TensorRefs grad_refs = grads.refs();
      if (config.use_adamw) {
        adamw_step(params, grad_refs, optimizer);
      } else {
        adam_step(params, grad_refs, optimizer);
      }
      if (config.single_precision) round_to_single(params);

      ++step;
      run.step_losses.push_back(loss);
      window_loss += loss;
      ++window_steps;
      evaluated_last = false;
      if (step % config.validation_interval == 0) validate();
    }
  }
  if (!evaluated_last) validate();
  run.steps = step;
  run.alignment_best = mean_alignment(run.best, corpus, config.alignment_sample);
  return run;
}

}  // namespace sifter
