#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sifter/augment.hpp"
#include "sifter/classify.hpp"
#include "sifter/config.hpp"
#include "sifter/contrastive.hpp"
#include "sifter/dataio.hpp"
#include "sifter/eval.hpp"
#include "sifter/harness.hpp"
#include "sifter/vocab.hpp"

namespace sifter {

// Config-driven pipelines behind each subcommand. Every artifact directory
// holds model.sift, vocab.txt, config.txt (the resolved config), metrics.csv
// and summary.json.

AugmentLexicons augment_lexicons(const Config& config);

struct AugmentRequest {
  std::filesystem::path input;
  std::filesystem::path sidecar;  // optional
  std::filesystem::path output;
  std::filesystem::path skipped;  // defaults to <output>.skipped.jsonl
};

struct AugmentSummary {
  std::size_t sentences = 0;
  std::size_t filtered = 0;
  TripleBuild build;
};

AugmentSummary cmd_augment(const Config& config, const AugmentRequest& request);

struct ContrastiveData {
  Vocabulary vocab;
  std::vector<EncodedTriple> triples;
  std::vector<EncodedPair> dev;
};

/// Builds the vocabulary from the training views only; dev tokens that never
/// occur there map to the unknown id.
ContrastiveData prepare_contrastive(std::span<const AugmentedTriple> triples,
                                    std::span<const StsPair> dev, bool case_fold);
ContrastiveTrainConfig contrastive_settings(const Config& config);
Encoder initial_encoder(const Config& config, std::size_t vocab_size);
ContrastiveRun run_contrastive(const Config& config, const ContrastiveData& data);

/// Named λ weightings: all = (1,1,1), xy = (1,0,0), xz = (0,1,0), yz = (0,0,1).
void apply_lambda_preset(Config& config, const std::string& preset);

struct ContrastiveRequest {
  std::filesystem::path triples;
  std::filesystem::path dev;
  std::filesystem::path out;
  std::string lambda_preset;   // optional
  bool dropout_sweep = false;  // runs p in {0.1, 0.15, 0.2} into p<value>/
};

struct ContrastiveJob {
  std::string name;
  std::filesystem::path dir;
  ContrastiveRun run;
};

std::vector<ContrastiveJob> cmd_train_contrastive(Config config, const ContrastiveRequest& request);

struct ClassifierData {
  Vocabulary vocab;
  std::vector<LabeledSentence> train, dev, test;
};

ClassifierData prepare_classifier(std::span<const LabeledText> train,
                                  std::span<const LabeledText> dev,
                                  std::span<const LabeledText> test, bool case_fold);
ClassifierTrainConfig classifier_settings(const Config& config);
SentenceClassifier initial_classifier(const Config& config, std::size_t vocab_size);
/// Loads the task lexicon named in the config; required for the sifter
/// variant, ignored (nullopt) for the standard one.
std::optional<Lexicon> classifier_lexicon(const Config& config);
ClassifierRun run_classifier(const Config& config, const ClassifierData& data,
                             const Lexicon* lexicon);

struct ClassifyRequest {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;  // optional
  std::filesystem::path out;
  std::vector<std::uint64_t> seeds;  // empty: the config seed only
};

struct ClassifyJob {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  ClassifierRun run;
  std::optional<double> test_accuracy;
};

struct ClassifySummary {
  std::vector<ClassifyJob> jobs;
  double mean = 0.0;    // of test accuracy when a test split is given, else best dev
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
};

ClassifySummary cmd_train_classify(Config config, const ClassifyRequest& request);

struct EvalRequest {
  std::filesystem::path checkpoint_dir;
  std::string task;  // sts | cls
  std::filesystem::path data;
};

EvalReport cmd_eval(const EvalRequest& request);

struct GradcheckRequest {
  std::string variant = "all";
  CheckDims dims;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;  // consecutive seeds starting at `seed`
  bool corrupt = false;
};

struct GradcheckResult {
  CheckKind kind;
  std::uint64_t seed;
  GradReport report;
};

/// Refuses single precision: finite differences need 64-bit arithmetic.
std::vector<GradcheckResult> cmd_gradcheck(const Config& config, const GradcheckRequest& request);

struct SeedStudyRequest {
  std::filesystem::path triples;
  std::filesystem::path dev;
  std::filesystem::path out;  // optional
  std::vector<std::uint64_t> seeds;
};

/// Best dev Spearman of the contrastive pipeline per seed.
SeedStudy cmd_seed_study(Config config, const SeedStudyRequest& request);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace sifter
