#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sifter/augment.hpp"
#include "sifter/classify.hpp"
#include "sifter/contrastive.hpp"

namespace sifter {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest round-tripping decimal form of `v`.
std::string format_real(double v);

/// Plain text (one sentence per line) or JSON lines with a `text` field,
/// detected from the first non-blank line. Blank lines are skipped; indices
/// count records.
Corpus read_corpus(const std::filesystem::path& path);

/// JSON lines: {"index": n, "triples": [[subject, relation, object], ...]}.
std::map<std::size_t, TripleAnnotation> read_sidecar(const std::filesystem::path& path);

std::string triples_jsonl(std::span<const AugmentedTriple> triples);
std::string skipped_jsonl(std::span<const SkippedSentence> skipped);
std::vector<AugmentedTriple> read_triples(const std::filesystem::path& path);

struct StsPair {
  std::string s1;
  std::string s2;
  double score = 0.0;
};

std::vector<StsPair> read_sts_pairs(const std::filesystem::path& path);
std::string sts_pairs_jsonl(std::span<const StsPair> pairs);

struct LabeledText {
  std::string text;
  std::size_t label = 0;
};

/// JSON lines with `text` and an integer `label` in [0, num_classes).
std::vector<LabeledText> read_labeled(const std::filesystem::path& path, std::size_t num_classes);
std::string labeled_jsonl(std::span<const LabeledText> rows);

std::string classifier_metrics_csv(std::span<const ClassifierHistoryRow> rows);
std::string contrastive_metrics_csv(std::span<const ContrastiveHistoryRow> rows);

}  // namespace sifter
