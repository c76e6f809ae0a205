#include "sifter/harness.hpp"

#include "sifter/classify.hpp"
#include "sifter/contrastive.hpp"
#include "sifter/error.hpp"

namespace sifter {
namespace {

std::vector<std::size_t> random_ids(std::size_t length, std::size_t vocab, Rng& rng) {
  std::vector<std::size_t> ids(length);
  for (auto& id : ids) id = rng.below(vocab);
  return ids;
}

std::string token_name(std::size_t id) { return "t" + std::to_string(id); }

GradReport check_classifier(CellVariant variant, const CheckDims& dims, std::uint64_t seed,
                            bool corrupt, const GradcheckOptions& opts) {
  Rng rng(seed);
  Rng init_rng = rng.fork(1);
  Rng data_rng = rng.fork(2);
  SentenceClassifier model = SentenceClassifier::init(dims.vocab, dims.input_dim, dims.hidden_dim,
                                                      dims.classes, variant, init_rng);
  // The lexicon holds the lower third of the vocabulary. Position 1 is always
  // a member and position 0 never is, so every sequence mixes both kinds.
  const std::size_t members = std::max<std::size_t>(1, dims.vocab / 3);
  std::vector<std::string> lexicon_tokens;
  for (std::size_t i = 0; i < members; ++i) lexicon_tokens.push_back(token_name(i));
  const Lexicon lexicon("check", lexicon_tokens);

  std::vector<LabeledSentence> data(dims.batch);
  for (auto& s : data) {
    s.ids = random_ids(dims.length, dims.vocab, data_rng);
    if (dims.vocab > members) s.ids[0] = members + data_rng.below(dims.vocab - members);
    if (dims.length > 1) s.ids[1] = data_rng.below(members);
    for (auto id : s.ids) s.tokens.push_back(token_name(id));
    s.label = data_rng.below(dims.classes);
  }
  std::vector<const LabeledSentence*> batch;
  for (const auto& s : data) batch.push_back(&s);

  BatchSettings settings;
  settings.lexicon = variant == CellVariant::sifter ? &lexicon : nullptr;
  settings.dropout = {dims.dropout, dims.dropout};
  settings.l2 = dims.l2;
  const std::uint64_t mask_seed = rng.fork(3).next_u64();

  SentenceClassifier grads = model.zeros_like();
  {
    Rng masks(mask_seed);
    classifier_batch_loss(model, batch, settings, masks, &grads);
  }
  if (corrupt) grads.head.bias[0] += 0.1;
  auto loss = [&] {
    Rng masks(mask_seed);
    return classifier_batch_loss(model, batch, settings, masks, nullptr);
  };
  return gradcheck(loss, model.refs(), grads.refs(), opts);
}

GradReport check_encoder(Pooling pooling, const CheckDims& dims, std::uint64_t seed, bool corrupt,
                         const GradcheckOptions& opts) {
  Rng rng(seed);
  Rng init_rng = rng.fork(1);
  Rng data_rng = rng.fork(2);
  Encoder encoder =
      Encoder::init(dims.vocab, dims.input_dim, pooling, dims.hidden_dim, dims.dropout, init_rng);
  std::vector<EncodedTriple> data(dims.batch);
  for (auto& t : data) {
    t.x = random_ids(dims.length, dims.vocab, data_rng);
    t.y_plus = random_ids(dims.length + 2, dims.vocab, data_rng);
    t.z_plus = random_ids(std::max<std::size_t>(1, dims.length - 1), dims.vocab, data_rng);
  }
  std::vector<const EncodedTriple*> batch;
  for (const auto& t : data) batch.push_back(&t);
  // A moderate temperature keeps the logits well scaled for differencing.
  LossWeights weights{1.0, 0.5, 0.25, 0.5};
  const std::uint64_t mask_seed = rng.fork(3).next_u64();

  Encoder grads = encoder.zeros_like();
  {
    Rng masks(mask_seed);
    contrastive_batch_loss(encoder, batch, weights, masks, &grads);
  }
  if (corrupt) grads.head_bias[0] += 0.1;
  auto loss = [&] {
    Rng masks(mask_seed);
    return contrastive_batch_loss(encoder, batch, weights, masks, nullptr);
  };
  return gradcheck(loss, encoder.refs(), grads.refs(), opts);
}

}  // namespace

std::string to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::standard: return "standard";
    case CheckKind::sifter: return "sifter";
    case CheckKind::contrastive_lstm: return "contrastive-lstm";
    case CheckKind::contrastive_mean: return "contrastive-mean";
  }
  return "?";
}

std::vector<CheckKind> parse_check_kinds(const std::string& text) {
  if (text == "standard") return {CheckKind::standard};
  if (text == "sifter") return {CheckKind::sifter};
  if (text == "contrastive" || text == "contrastive-lstm") return {CheckKind::contrastive_lstm};
  if (text == "contrastive-mean") return {CheckKind::contrastive_mean};
  if (text == "all") {
    return {CheckKind::standard, CheckKind::sifter, CheckKind::contrastive_lstm,
            CheckKind::contrastive_mean};
  }
  throw ValidationError("unknown gradcheck variant '" + text +
                        "' (standard|sifter|contrastive|contrastive-mean|all)");
}

GradReport check_gradients(CheckKind kind, const CheckDims& dims, std::uint64_t seed,
                           bool corrupt, const GradcheckOptions& base) {
  if (dims.input_dim == 0 || dims.hidden_dim == 0 || dims.length == 0 || dims.batch == 0 ||
      dims.vocab < 2 || dims.classes < 2) {
    throw ValidationError("gradcheck dimensions must be positive (vocab and classes >= 2)");
  }
  GradcheckOptions opts = base;
  opts.seed = seed;
  switch (kind) {
    case CheckKind::standard:
      return check_classifier(CellVariant::standard, dims, seed, corrupt, opts);
    case CheckKind::sifter:
      return check_classifier(CellVariant::sifter, dims, seed, corrupt, opts);
    case CheckKind::contrastive_lstm:
      return check_encoder(Pooling::lstm, dims, seed, corrupt, opts);
    case CheckKind::contrastive_mean:
      return check_encoder(Pooling::mean, dims, seed, corrupt, opts);
  }
  throw ValidationError("unknown gradcheck variant");
}

}  // namespace sifter
