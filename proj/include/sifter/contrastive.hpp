#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sifter/eval.hpp"
#include "sifter/numerics.hpp"
#include "sifter/optim.hpp"
#include "sifter/recurrent.hpp"

namespace sifter {

/// Dot product of the L2-normalized inputs. Throws on a zero vector.
double cosine(const Tensor& u, const Tensor& v);

struct InfoNce {
  double loss = 0.0;
  Tensor grad_anchors;    // N x d
  Tensor grad_positives;  // N x d
};

// Mean over anchors i of -log softmax_j(sim(a_i, p_j)/τ)[i]. Every row of
// `positives` serves as an in-batch negative for the other anchors.
double info_nce(const Tensor& anchors, const Tensor& positives, double temperature);
InfoNce info_nce_with_grad(const Tensor& anchors, const Tensor& positives, double temperature);

struct LossWeights {
  double xy = 1.0;
  double xz = 1.0;
  double yz = 1.0;
  double temperature = 0.05;

  void validate() const;
};

struct SifterLoss {
  double loss = 0.0;
  double term_xy = 0.0, term_xz = 0.0, term_yz = 0.0;
  Tensor grad_x, grad_y, grad_z;
};

/// λ_xy·NCE(X,Y) + λ_xz·NCE(X,Z) + λ_yz·NCE(Y,Z). Terms with zero weight are
/// skipped entirely.
double sifter_loss(const Tensor& hx, const Tensor& hy, const Tensor& hz,
                   const LossWeights& weights);
SifterLoss sifter_loss_with_grad(const Tensor& hx, const Tensor& hy, const Tensor& hz,
                                 const LossWeights& weights);

enum class Pooling { mean, lstm };

std::string to_string(Pooling p);
Pooling parse_pooling(const std::string& text);

/// Small trainable sentence encoder: embedding lookup, pooling (mean or the
/// final LSTM hidden state) and a tanh projection head that only runs in
/// train mode.
struct Encoder {
  Tensor embedding;  // vocab x d_e
  Pooling pooling = Pooling::mean;
  LstmParams lstm;   // only for Pooling::lstm
  Tensor head_weight;  // d x d, d = representation size
  Tensor head_bias;    // d
  double dropout = 0.15;

  static Encoder init(std::size_t vocab_size, std::size_t embed_dim, Pooling pooling,
                      std::size_t hidden_dim, double dropout, Rng& rng);
  std::size_t output_dim() const { return head_bias.size(); }
  Encoder zeros_like() const;
  TensorRefs refs();
};

struct EncodeCache {
  std::vector<std::size_t> ids;
  DropoutMask mask;     // mean pooling: mask over the T x d_e inputs
  SequenceCache sequence;  // lstm pooling
  Tensor pooled;
  Tensor projected;
};

/// Train mode applies dropout to the token embeddings and the projection
/// head; eval mode is deterministic and returns the pooled vector directly.
Tensor encode(const Encoder& encoder, std::span<const std::size_t> ids, bool train_mode,
              Rng& rng, EncodeCache* cache = nullptr);

/// Accumulates dLoss/dθ into `grads` given dLoss/d(encoding) for a
/// train-mode encoding described by `cache`.
void encode_backward(const Encoder& encoder, const EncodeCache& cache, const Tensor& grad,
                     Encoder& grads);

struct EncodedTriple {
  std::vector<std::size_t> x;
  std::vector<std::size_t> y_plus;
  std::vector<std::size_t> z_plus;
};

/// Encodes the three views of every triple in train mode and returns the
/// loss; with `grads` set, also the full gradient (overwritten).
double contrastive_batch_loss(const Encoder& encoder, std::span<const EncodedTriple* const> batch,
                              const LossWeights& weights, Rng& rng, Encoder* grads);

/// Mean eval-mode cosine between x and y_plus over the first `limit` triples.
double mean_alignment(const Encoder& encoder, std::span<const EncodedTriple> triples,
                      std::size_t limit = 256);

struct ContrastiveTrainConfig {
  LossWeights weights;
  AdamConfig optimizer{1e-5, 0.9, 0.999, 1e-8, 0.01};
  bool use_adamw = true;
  std::size_t batch_size = 64;
  std::size_t validation_interval = 125;
  std::size_t epochs = 1;
  std::optional<std::size_t> max_steps;
  std::uint64_t seed = 0;
  bool single_precision = false;
  std::size_t alignment_sample = 256;
};

struct ContrastiveHistoryRow {
  std::size_t step = 0;
  double loss = 0.0;  // mean minibatch loss since the previous row; NaN at step 0
  double dev_spearman = 0.0;
};

struct ContrastiveRun {
  Encoder best;
  std::size_t best_step = 0;
  double best_spearman = 0.0;
  double init_spearman = 0.0;
  double alignment_init = 0.0;
  double alignment_best = 0.0;
  std::vector<ContrastiveHistoryRow> history;
  std::vector<double> step_losses;
  std::size_t steps = 0;
};

/// AdamW (or Adam) on the three-view loss over shuffled minibatches, with
/// dev Spearman every `validation_interval` steps and at the end. Keeps the
/// best-Spearman encoder; ties keep the earliest.
ContrastiveRun train_contrastive(const Encoder& init, std::span<const EncodedTriple> corpus,
                                 std::span<const EncodedPair> dev,
                                 const ContrastiveTrainConfig& config);

}  // namespace sifter
