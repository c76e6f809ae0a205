#include "sifter/classify.hpp"

#include <cmath>
#include <limits>

#include "sifter/error.hpp"
#include "sifter/eval.hpp"

namespace sifter {

ClassifierHead ClassifierHead::zeros(std::size_t num_classes, std::size_t hidden_dim) {
  if (num_classes < 2) {
    throw ValidationError("classifier needs at least 2 classes, got " +
                          std::to_string(num_classes));
  }
  return {Tensor::matrix(num_classes, hidden_dim), Tensor::vector(num_classes)};
}

TensorRefs ClassifierHead::refs(const std::string& prefix) {
  return {{prefix + "w", &weight}, {prefix + "b", &bias}};
}

namespace {

Tensor logits(const ClassifierHead& head, const Tensor& hidden) {
  if (hidden.size() != head.weight.cols()) {
    throw ShapeError("classifier head expects hidden size " +
                     std::to_string(head.weight.cols()) + ", got " + hidden.shape_string());
  }
  Tensor z = matmul(head.weight, hidden);
  add_inplace(z, head.bias);
  return z;
}

}  // namespace

std::size_t argmax(const Tensor& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Tensor predict_proba(const ClassifierHead& head, const Tensor& hidden) {
  return softmax(logits(head, hidden));
}

std::size_t predict_label(const ClassifierHead& head, const Tensor& hidden) {
  return argmax(predict_proba(head, hidden));
}

CrossEntropy cross_entropy(const ClassifierHead& head, const Tensor& hidden, std::size_t label) {
  const std::size_t k = head.num_classes();
  if (label >= k) {
    throw ValidationError("label " + std::to_string(label) + " outside {0.." +
                          std::to_string(k - 1) + "}");
  }
  const Tensor z = logits(head, hidden);
  // log-softmax through the max-shifted log-sum-exp keeps -log p finite.
  double peak = z[0];
  for (std::size_t i = 1; i < k; ++i) peak = std::max(peak, z[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += std::exp(z[i] - peak);

  CrossEntropy out;
  out.loss = -(z[label] - peak - std::log(total));
  out.probabilities = softmax(z);
  Tensor dz = out.probabilities;
  dz[label] -= 1.0;
  out.grad_head = ClassifierHead::zeros(k, hidden.size());
  add_outer(out.grad_head.weight, dz, hidden);
  out.grad_head.bias = dz;
  out.grad_hidden = matmul_transposed(head.weight, dz);
  return out;
}

CeLoss ce_loss(const ClassifierHead& head, const Tensor& hidden, std::size_t label,
               const TensorRefs& regularized, double lambda) {
  CeLoss out;
  out.data = cross_entropy(head, hidden, label);
  L2Result l2 = l2_penalty(regularized, lambda);
  out.loss = out.data.loss + l2.penalty;
  out.l2_grads = std::move(l2.grads);
  return out;
}

std::string to_string(CellVariant v) { return v == CellVariant::sifter ? "sifter" : "standard"; }

CellVariant parse_variant(const std::string& text) {
  if (text == "standard") return CellVariant::standard;
  if (text == "sifter") return CellVariant::sifter;
  throw ValidationError("unknown cell variant '" + text + "' (expected standard|sifter)");
}

SentenceClassifier SentenceClassifier::init(std::size_t vocab_size, std::size_t input_dim,
                                            std::size_t hidden_dim, std::size_t num_classes,
                                            CellVariant variant, Rng& rng) {
  SentenceClassifier m;
  m.variant = variant;
  Rng embed_rng = rng.fork(1);
  Rng lstm_rng = rng.fork(2);
  Rng head_rng = rng.fork(3);
  m.embedding = Tensor::matrix(vocab_size, input_dim);
  const double embed_bound = std::sqrt(3.0 / static_cast<double>(input_dim));
  for (double& x : m.embedding.data()) x = embed_rng.uniform(-embed_bound, embed_bound);
  m.lstm = LstmParams::uniform_init(input_dim, hidden_dim, lstm_rng);
  m.head = ClassifierHead::zeros(num_classes, hidden_dim);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (double& x : m.head.weight.data()) x = head_rng.uniform(-head_bound, head_bound);
  return m;
}

SentenceClassifier SentenceClassifier::zeros_like() const {
  SentenceClassifier g;
  g.variant = variant;
  g.embedding = Tensor::matrix(embedding.rows(), embedding.cols());
  g.lstm = LstmParams::zeros(lstm.input_dim(), lstm.hidden_dim());
  g.head = ClassifierHead::zeros(head.num_classes(), head.weight.cols());
  return g;
}

std::vector<const Tensor*> SentenceClassifier::tensors() const {
  const LstmParams& l = lstm;
  return {&embedding, &l.w_f, &l.w_i, &l.w_o, &l.w_c, &l.u_f, &l.u_i, &l.u_o,
          &l.u_c,     &l.b_f, &l.b_i, &l.b_o, &l.b_c, &head.weight, &head.bias};
}

TensorRefs SentenceClassifier::refs() {
  TensorRefs out{{"embedding", &embedding}};
  for (auto& r : lstm.refs()) out.push_back(r);
  for (auto& r : head.refs()) out.push_back(r);
  return out;
}

namespace {

const Lexicon* effective_lexicon(const SentenceClassifier& model, const Lexicon* lexicon) {
  if (model.variant == CellVariant::standard) return nullptr;
  if (lexicon == nullptr) {
    throw ValidationError("the sifter variant requires a lexicon");
  }
  return lexicon;
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  if (ids.empty()) throw ValidationError("cannot embed an empty sentence");
  Tensor out = Tensor::matrix(ids.size(), table.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= table.rows()) {
      throw ValidationError("token id " + std::to_string(ids[t]) + " outside vocabulary of " +
                            std::to_string(table.rows()));
    }
    auto src = table.row(ids[t]);
    auto dst = out.row(t);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

}  // namespace

double classifier_batch_loss(const SentenceClassifier& model,
                             std::span<const LabeledSentence* const> batch,
                             const BatchSettings& settings, Rng& rng,
                             SentenceClassifier* grads) {
  if (batch.empty()) throw ValidationError("empty minibatch");
  const Lexicon* lexicon = effective_lexicon(model, settings.lexicon);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (grads != nullptr) *grads = model.zeros_like();

  double data_loss = 0.0;
  for (const LabeledSentence* ex : batch) {
    const Tensor inputs = gather_rows(model.embedding, ex->ids);
    const bool need_cache = settings.train_mode && grads != nullptr;
    SequenceOutput seq = sequence_forward(model.lstm, inputs, ex->tokens, lexicon,
                                          settings.dropout, rng, settings.train_mode);
    CrossEntropy ce = cross_entropy(model.head, seq.output, ex->label);
    data_loss += ce.loss;
    if (!need_cache) continue;

    axpy(inv_n, ce.grad_head.weight, grads->head.weight);
    axpy(inv_n, ce.grad_head.bias, grads->head.bias);
    SequenceGrads sg{std::move(grads->lstm),
                     Tensor::matrix(ex->ids.size(), model.lstm.input_dim())};
    sequence_backward_into(model.lstm, seq.cache, scale(ce.grad_hidden, inv_n), sg);
    grads->lstm = std::move(sg.params);
    for (std::size_t t = 0; t < ex->ids.size(); ++t) {
      auto row = grads->embedding.row(ex->ids[t]);
      auto g = sg.embeddings.row(t);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += g[j];
    }
  }
  double loss = data_loss * inv_n;
  if (settings.l2 < 0.0) throw ValidationError("L2 strength must be nonnegative");
  if (settings.l2 != 0.0) {
    const auto params = model.tensors();
    std::vector<Tensor*> dst;
    if (grads != nullptr) {
      for (auto& r : grads->refs()) dst.push_back(r.tensor);
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      loss += settings.l2 * sum_squares(*params[k]);
      if (grads != nullptr) axpy(2.0 * settings.l2, *params[k], *dst[k]);
    }
  }
  return loss;
}

std::size_t classify(const SentenceClassifier& model, const LabeledSentence& example,
                     const Lexicon* lexicon) {
  Rng unused(0);
  const Tensor inputs = gather_rows(model.embedding, example.ids);
  SequenceOutput seq = sequence_forward(model.lstm, inputs, example.tokens,
                                        effective_lexicon(model, lexicon), {}, unused, false);
  return predict_label(model.head, seq.output);
}

double classifier_accuracy(const SentenceClassifier& model,
                           std::span<const LabeledSentence> data, const Lexicon* lexicon) {
  std::vector<std::size_t> gold, predicted;
  for (const auto& ex : data) {
    gold.push_back(ex.label);
    predicted.push_back(classify(model, ex, lexicon));
  }
  return accuracy(gold, predicted);
}

double classifier_mean_loss(const SentenceClassifier& model,
                            std::span<const LabeledSentence> data, const Lexicon* lexicon) {
  std::vector<const LabeledSentence*> all;
  for (const auto& ex : data) all.push_back(&ex);
  BatchSettings eval;
  eval.lexicon = lexicon;
  eval.train_mode = false;
  Rng unused(0);
  return classifier_batch_loss(model, all, eval, unused, nullptr);
}

ClassifierRun train_classifier(const SentenceClassifier& init,
                               std::span<const LabeledSentence> train,
                               std::span<const LabeledSentence> dev, const Lexicon* lexicon,
                               const ClassifierTrainConfig& config) {
  if (train.empty() || dev.empty()) {
    throw ValidationError("classifier training needs nonempty train and dev splits");
  }
  if (config.batch_size == 0 || config.validation_interval == 0) {
    throw ValidationError("batch size and validation interval must be at least 1");
  }
  if (!(config.optimizer.learning_rate > 0.0) || config.l2 < 0.0) {
    throw ValidationError("learning rate must be positive and L2 strength nonnegative");
  }
  check_dropout_rate(config.dropout);
  effective_lexicon(init, lexicon);

  SentenceClassifier model = init;
  ClassifierRun run;
  run.best = model;
  run.best_dev_accuracy = classifier_accuracy(model, dev, lexicon);
  run.history.push_back({0, classifier_mean_loss(model, train, lexicon), run.best_dev_accuracy});

  const Rng root(config.seed);
  Rng dropout_rng = root.fork(11);
  AdamState optimizer(config.optimizer);
  BatchSettings settings;
  settings.lexicon = lexicon;
  settings.dropout = {config.dropout, config.dropout};
  settings.l2 = config.l2;

  std::vector<std::size_t> order(train.size());
  SentenceClassifier grads = model.zeros_like();
  double window_loss = 0.0;
  std::size_t window_steps = 0;
  std::size_t step = 0;
  bool evaluated_last = true;

  auto validate = [&]() {
    const double acc = classifier_accuracy(model, dev, lexicon);
    run.history.push_back({step, window_loss / static_cast<double>(window_steps), acc});
    window_loss = 0.0;
    window_steps = 0;
    evaluated_last = true;
    if (acc > run.best_dev_accuracy) {
      run.best_dev_accuracy = acc;
      run.best = model;
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
      std::vector<const LabeledSentence*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);

      const double loss = classifier_batch_loss(model, batch, settings, dropout_rng, &grads);
      if (!std::isfinite(loss)) {
        throw NumericError("classifier loss became non-finite at step " +
                           std::to_string(step + 1) + " (epoch " + std::to_string(epoch) + ")");
      }
      TensorRefs params = model.refs();
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
  return run;
}

}  // namespace sifter
