#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sifter {

struct Encoder;

/// Fractional (average) ranks, 1-based; tied values share the mean of the
/// positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks. Throws DegenerateInputError when
/// either side is constant.
double spearman(std::span<const double> gold, std::span<const double> pred);

double accuracy(std::span<const std::size_t> gold, std::span<const std::size_t> predicted);

struct EvalReport {
  std::string metric;
  double value = 0.0;
  std::size_t samples = 0;
  std::string checkpoint;

  void print_text(std::ostream& out) const;
  void print_csv(std::ostream& out) const;
};

/// An STS pair with token ids already resolved against the encoder vocabulary.
struct EncodedPair {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  double gold = 0.0;
};

/// Cosine of eval-mode encodings per pair, scored by Spearman against gold.
EvalReport sts_eval(const Encoder& encoder, std::span<const EncodedPair> pairs,
                    const std::string& checkpoint_id = "");

struct SeedStudy {
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double spread() const { return max - min; }
};

/// Runs `run` once per seed, in order. A failing run aborts the study with an
/// error naming the seed.
SeedStudy seed_stability(const std::function<double(std::uint64_t)>& run,
                         std::span<const std::uint64_t> seeds);

}  // namespace sifter
