#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sifter/lexicon.hpp"
#include "sifter/numerics.hpp"
#include "sifter/optim.hpp"
#include "sifter/recurrent.hpp"

namespace sifter {

/// Linear map from the final hidden state to k class logits.
struct ClassifierHead {
  Tensor weight;  // k x d_h
  Tensor bias;    // k

  static ClassifierHead zeros(std::size_t num_classes, std::size_t hidden_dim);
  std::size_t num_classes() const { return bias.size(); }
  TensorRefs refs(const std::string& prefix = "head.");
};

Tensor predict_proba(const ClassifierHead& head, const Tensor& hidden);
/// argmax of the class probabilities; ties go to the lowest index.
std::size_t predict_label(const ClassifierHead& head, const Tensor& hidden);
std::size_t argmax(const Tensor& v);

struct CrossEntropy {
  double loss = 0.0;
  Tensor probabilities;
  Tensor grad_hidden;
  ClassifierHead grad_head;
};

/// -log p(label) for one example, with gradients for the head and for h_T.
CrossEntropy cross_entropy(const ClassifierHead& head, const Tensor& hidden, std::size_t label);

struct CeLoss {
  CrossEntropy data;
  double loss = 0.0;  // data.loss + λ‖θ‖²
  std::vector<Tensor> l2_grads;  // aligned with the regularized refs
};

CeLoss ce_loss(const ClassifierHead& head, const Tensor& hidden, std::size_t label,
               const TensorRefs& regularized, double lambda);

enum class CellVariant { standard, sifter };

std::string to_string(CellVariant v);
CellVariant parse_variant(const std::string& text);

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> ids;
  std::size_t label = 0;
};

/// Embedding table, one recurrent layer and a softmax head over h_T.
/// Also used as the gradient accumulator (same shapes).
struct SentenceClassifier {
  Tensor embedding;  // vocab x d_in
  LstmParams lstm;
  ClassifierHead head;
  CellVariant variant = CellVariant::standard;

  static SentenceClassifier init(std::size_t vocab_size, std::size_t input_dim,
                                 std::size_t hidden_dim, std::size_t num_classes,
                                 CellVariant variant, Rng& rng);
  SentenceClassifier zeros_like() const;
  TensorRefs refs();
  std::vector<const Tensor*> tensors() const;
};

struct BatchSettings {
  const Lexicon* lexicon = nullptr;  // consulted only by the sifter variant
  SequenceDropout dropout;
  double l2 = 0.0;
  bool train_mode = true;
};

/// Mean cross-entropy over `batch` plus λ‖θ‖² over every parameter. When
/// `grads` is given it receives the full gradient (overwritten, not added).
double classifier_batch_loss(const SentenceClassifier& model,
                             std::span<const LabeledSentence* const> batch,
                             const BatchSettings& settings, Rng& rng,
                             SentenceClassifier* grads);

std::size_t classify(const SentenceClassifier& model, const LabeledSentence& example,
                     const Lexicon* lexicon);
double classifier_accuracy(const SentenceClassifier& model,
                           std::span<const LabeledSentence> data, const Lexicon* lexicon);
double classifier_mean_loss(const SentenceClassifier& model,
                            std::span<const LabeledSentence> data, const Lexicon* lexicon);

struct ClassifierTrainConfig {
  AdamConfig optimizer{1e-5, 0.9, 0.999, 1e-8, 0.0};
  bool use_adamw = false;
  std::size_t batch_size = 32;
  double l2 = 1e-7;
  double dropout = 0.2;
  std::size_t validation_interval = 50;
  std::size_t epochs = 1;
  std::optional<std::size_t> max_steps;
  std::uint64_t seed = 0;
  bool single_precision = false;  // round parameters to float after each update
};

struct ClassifierHistoryRow {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean minibatch loss since the previous row
  double dev_accuracy = 0.0;
};

struct ClassifierRun {
  SentenceClassifier best;
  std::size_t best_step = 0;
  double best_dev_accuracy = 0.0;
  std::vector<ClassifierHistoryRow> history;
  std::vector<double> step_losses;
  std::size_t steps = 0;
};

/// Minibatch Adam(W) training with periodic dev evaluation. Row 0 of the
/// history is the initialization (train loss measured in eval mode over the
/// train split). The best-dev checkpoint wins; ties keep the earliest.
ClassifierRun train_classifier(const SentenceClassifier& init,
                               std::span<const LabeledSentence> train,
                               std::span<const LabeledSentence> dev, const Lexicon* lexicon,
                               const ClassifierTrainConfig& config);

}  // namespace sifter
