#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sifter/numerics.hpp"

namespace sifter {

/// Non-owning named handle to a parameter (or gradient) tensor. Models hand
/// out lists of these in a fixed order; optimizer state and checkpoints rely
/// on that order.
struct TensorRef {
  std::string name;
  Tensor* tensor;
};
using TensorRefs = std::vector<TensorRef>;

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // only read by adamw_step
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

// Bias-corrected Adam. Moments are allocated on the first call and must
// keep the same shapes afterwards. A non-finite gradient aborts before any
// parameter is touched.
void adam_step(const TensorRefs& params, const TensorRefs& grads, AdamState& state);

// Adam followed by decoupled decay θ -= η·w·θ, where θ is the value before
// this step's update.
void adamw_step(const TensorRefs& params, const TensorRefs& grads, AdamState& state);

/// Rounds every entry to the nearest 32-bit float (single-precision storage).
void round_to_single(const TensorRefs& params);

struct L2Result {
  double penalty = 0.0;
  std::vector<Tensor> grads;  // 2λθ, aligned with the input refs
};

L2Result l2_penalty(const TensorRefs& params, double lambda);

struct GradEntry {
  std::string name;
  std::size_t checked = 0;  // coordinates differenced
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradReport {
  std::vector<GradEntry> entries;
  double max_rel_error = 0.0;
  double threshold = 1e-4;
  bool passed = true;

  void print_table(std::ostream& out) const;
  void print_csv(std::ostream& out) const;
};

struct GradcheckOptions {
  double step = 1e-5;
  double threshold = 1e-4;
  std::size_t max_coords = 200;  // per tensor; smaller tensors are checked fully
  std::uint64_t seed = 0;
};

double relative_error(double analytic, double numeric);

/// Compares `analytic` against central differences of `loss`, perturbing the
/// tensors in `params` in place (each coordinate is restored afterwards).
/// `loss` must be a deterministic function of the parameters, so any dropout
/// masks or lexicon indicators have to be frozen by the caller.
GradReport gradcheck(const std::function<double()>& loss, const TensorRefs& params,
                     const TensorRefs& analytic, const GradcheckOptions& opts = {});

}  // namespace sifter
