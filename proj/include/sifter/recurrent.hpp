#pragma once

#include <span>
#include <string>
#include <vector>

#include "sifter/lexicon.hpp"
#include "sifter/numerics.hpp"
#include "sifter/optim.hpp"

namespace sifter {

/// Weights of one LSTM layer. Input maps are d_h x d_in, recurrent maps
/// d_h x d_h, and every gate has its own bias.
struct LstmParams {
  Tensor w_f, w_i, w_o, w_c;
  Tensor u_f, u_i, u_o, u_c;
  Tensor b_f, b_i, b_o, b_c;

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Every entry drawn from uniform(-1/sqrt(d_h), 1/sqrt(d_h)).
  static LstmParams uniform_init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  std::size_t input_dim() const { return w_f.cols(); }
  std::size_t hidden_dim() const { return w_f.rows(); }
  void validate() const;
  TensorRefs refs(const std::string& prefix = "lstm.");
};

struct CellState {
  Tensor h;
  Tensor c;

  static CellState zeros(std::size_t hidden_dim);
};

/// Everything the backward pass needs from one timestep.
struct StepCache {
  Tensor x;
  Tensor h_prev, c_prev;
  Tensor f, i, o;   // gate activations
  Tensor c_plus;    // candidate memory
  Tensor z_f, z_i, z_o, z_c;  // pre-activations
  Tensor c, tanh_c, h;
  bool short_circuit = false;  // token was in the lexicon
};

struct StepResult {
  CellState state;
  StepCache cache;
};

// c = f⊙c_prev + i⊙c⁺ normally; with `short_circuit` the input gate is
// bypassed and c = f⊙c_prev + c⁺. The gate value is still computed and cached.
StepResult cell_step(const LstmParams& params, const Tensor& x, const CellState& prev,
                     bool short_circuit);

StepResult lstm_step(const LstmParams& params, const Tensor& x, const CellState& prev);

StepResult sifter_step(const LstmParams& params, const Tensor& x, std::string_view token,
                       const CellState& prev, const Lexicon& lexicon);

struct SequenceDropout {
  double embedding = 0.0;  // applied to the T x d_in inputs
  double output = 0.0;     // applied to h_T
};

struct SequenceCache {
  std::vector<StepCache> steps;
  DropoutMask embedding_mask;
  DropoutMask output_mask;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

struct SequenceOutput {
  Tensor hidden;  // T x d_h, before output dropout
  Tensor output;  // h_T after output dropout: the sentence representation
  SequenceCache cache;  // empty in eval mode
};

/// Runs the cell over `embeddings` (T x d_in) from a zero state. With a
/// lexicon, step t is short-circuited when tokens[t] is a member; without
/// one the standard cell is used and `tokens` may be empty.
SequenceOutput sequence_forward(const LstmParams& params, const Tensor& embeddings,
                                std::span<const std::string> tokens, const Lexicon* lexicon,
                                const SequenceDropout& dropout, Rng& rng, bool train_mode);

struct SequenceGrads {
  LstmParams params;
  Tensor embeddings;  // T x d_in
};

/// Reverse-mode gradients given dLoss/d(output). Accumulates into `grads`,
/// which must already have the shapes of `params` and the input sequence.
void sequence_backward_into(const LstmParams& params, const SequenceCache& cache,
                            const Tensor& grad_output, SequenceGrads& grads);

SequenceGrads sequence_backward(const LstmParams& params, const SequenceCache& cache,
                                const Tensor& grad_output);

}  // namespace sifter
