#include "sifter/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sifter/contrastive.hpp"
#include "sifter/error.hpp"

namespace sifter {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("correlation inputs differ in length: " + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateInputError("correlation is undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> gold, std::span<const double> pred) {
  if (gold.size() != pred.size()) {
    throw ValidationError("spearman: " + std::to_string(gold.size()) + " gold scores but " +
                          std::to_string(pred.size()) + " predictions");
  }
  if (gold.size() < 2) throw ValidationError("spearman needs at least 2 samples");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!std::isfinite(gold[i]) || !std::isfinite(pred[i])) {
      throw NumericError("spearman: non-finite score at index " + std::to_string(i));
    }
  }
  const auto rg = average_ranks(gold);
  const auto rp = average_ranks(pred);
  return pearson(rg, rp);
}

double accuracy(std::span<const std::size_t> gold, std::span<const std::size_t> predicted) {
  if (gold.size() != predicted.size()) {
    throw ValidationError("accuracy: " + std::to_string(gold.size()) + " gold labels but " +
                          std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw ValidationError("accuracy of an empty set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

void EvalReport::print_text(std::ostream& out) const {
  std::ostringstream text;
  text << metric << ": " << std::fixed << std::setprecision(6) << value << " (" << samples
       << " samples";
  if (!checkpoint.empty()) text << ", checkpoint " << checkpoint;
  text << ")\n";
  out << text.str();
}

void EvalReport::print_csv(std::ostream& out) const {
  std::ostringstream text;
  text << "metric,value,samples,checkpoint\n"
       << metric << "," << std::setprecision(17) << value << "," << samples << "," << checkpoint
       << "\n";
  out << text.str();
}

EvalReport sts_eval(const Encoder& encoder, std::span<const EncodedPair> pairs,
                    const std::string& checkpoint_id) {
  if (pairs.empty()) throw ValidationError("sts_eval: no pairs");
  std::vector<double> gold, predicted;
  Rng unused(0);
  for (const auto& p : pairs) {
    const Tensor a = encode(encoder, p.first, false, unused);
    const Tensor b = encode(encoder, p.second, false, unused);
    gold.push_back(p.gold);
    predicted.push_back(cosine(a, b));
  }
  EvalReport report;
  report.metric = "spearman";
  report.samples = pairs.size();
  report.checkpoint = checkpoint_id;
  try {
    report.value = spearman(gold, predicted);
  } catch (const DegenerateInputError&) {
    throw DegenerateInputError(
        "sts_eval: predictions or gold scores are constant; Spearman is undefined");
  }
  return report;
}

SeedStudy seed_stability(const std::function<double(std::uint64_t)>& run,
                         std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw ValidationError("seed study needs at least 2 seeds");
  auto context = [](std::uint64_t seed) {
    return "seed study run failed for seed " + std::to_string(seed) + ": ";
  };
  SeedStudy study;
  for (std::uint64_t seed : seeds) {
    double value = 0.0;
    try {
      value = run(seed);
    } catch (const ValidationError& e) {
      throw ValidationError(context(seed) + e.what());
    } catch (const IoError& e) {
      throw IoError(context(seed) + e.what());
    } catch (const std::exception& e) {
      throw NumericError(context(seed) + e.what());
    }
    if (!std::isfinite(value)) {
      throw NumericError("seed study run for seed " + std::to_string(seed) +
                         " produced a non-finite metric");
    }
    study.seeds.push_back(seed);
    study.values.push_back(value);
  }
  study.max = *std::max_element(study.values.begin(), study.values.end());
  study.min = *std::min_element(study.values.begin(), study.values.end());
  double total = 0.0;
  for (double v : study.values) total += v;
  study.mean = total / static_cast<double>(study.values.size());
  return study;
}

}  // namespace sifter
