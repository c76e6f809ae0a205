#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sifter/optim.hpp"

namespace sifter {

enum class CheckKind { standard, sifter, contrastive_lstm, contrastive_mean };

std::string to_string(CheckKind kind);
/// Accepts standard, sifter, contrastive, contrastive-lstm, contrastive-mean
/// and all (expanded to every kind).
std::vector<CheckKind> parse_check_kinds(const std::string& text);

struct CheckDims {
  std::size_t input_dim = 8;
  std::size_t hidden_dim = 6;
  std::size_t length = 5;
  std::size_t classes = 3;
  std::size_t batch = 4;
  std::size_t vocab = 12;
  double l2 = 1e-3;
  double dropout = 0.2;
};

/// Finite-difference check of the full composed model: classifier over a
/// standard or lexicon-gated LSTM, or the sentence encoder under the
/// three-view loss. Dropout is active with masks frozen across evaluations.
/// `corrupt` perturbs one analytic entry so the check must fail.
GradReport check_gradients(CheckKind kind, const CheckDims& dims, std::uint64_t seed,
                           bool corrupt = false, const GradcheckOptions& base = {});

}  // namespace sifter
