#include "sifter/pipelines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <json.hpp>

#include "sifter/checkpoint.hpp"
#include "sifter/error.hpp"

namespace sifter {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

Json config_json(const Config& config) {
  Json out = Json::object();
  for (const auto& [k, v] : config.values()) out[k] = v;
  return out;
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " path is required");
  if (!fs::is_regular_file(path)) throw IoError(what + " " + path.string() + " does not exist");
}

std::optional<std::size_t> optional_steps(const Config& config, const std::string& key) {
  const std::size_t v = config.count(key);
  if (v == 0) return std::nullopt;
  return v;
}

AdamConfig adam_settings(const Config& config, const std::string& section) {
  AdamConfig a;
  a.learning_rate = config.real(section + ".learning_rate");
  a.weight_decay = config.real(section + ".weight_decay");
  a.beta1 = config.real("optim.beta1");
  a.beta2 = config.real("optim.beta2");
  a.epsilon = config.real("optim.epsilon");
  if (!(a.learning_rate > 0.0)) throw ValidationError(section + ".learning_rate must be positive");
  if (a.weight_decay < 0.0) throw ValidationError(section + ".weight_decay must be non-negative");
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0)) {
    throw ValidationError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (!(a.epsilon > 0.0)) throw ValidationError("optim.epsilon must be positive");
  return a;
}

bool use_adamw(const Config& config, const std::string& section) {
  const std::string& name = config.str(section + ".optimizer");
  if (name == "adamw") return true;
  if (name == "adam") return false;
  throw ValidationError(section + ".optimizer must be adam or adamw, got '" + name + "'");
}

bool single_precision(const Config& config) {
  const std::string& p = config.str("precision");
  if (p == "f64") return false;
  if (p == "f32") return true;
  throw ValidationError("precision must be f64 or f32, got '" + p + "'");
}

std::size_t positive(const Config& config, const std::string& key) {
  const std::size_t v = config.count(key);
  if (v == 0) throw ValidationError("config key '" + key + "' must be positive");
  return v;
}

Lexicon lexicon_or(const Config& config, const std::string& key, Lexicon fallback) {
  const std::string& path = config.str(key);
  if (path.empty()) return fallback;
  return Lexicon::load(path, config.flag("case_fold"));
}

std::vector<std::size_t> ids_for(const Vocabulary& vocab, const std::string& text) {
  const auto tokens = tokenize(text);
  return vocab.ids(tokens);
}

void write_run_files(const fs::path& dir, const Config& config, const Vocabulary& vocab,
                     const Checkpoint& best, const std::string& metrics, const Json& summary) {
  fs::create_directories(dir);
  save_checkpoint(best, dir / "model.sift");
  vocab.save(dir / "vocab.txt");
  write_text_file(dir / "config.txt", config.resolved_text());
  write_text_file(dir / "metrics.csv", metrics);
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

double sample_stddev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    Config scratch;
    scratch.set("seed", item);
    seeds.push_back(scratch.u64("seed"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ValidationError("seed list '" + text + "' repeats a seed");
  }
  return seeds;
}

AugmentLexicons augment_lexicons(const Config& config) {
  const bool fold = config.flag("case_fold");
  PosLexicons pos = default_pos_lexicons(fold);
  return {lexicon_or(config, "augment.deletion_lexicon", default_deletion_lexicon(fold)),
          {lexicon_or(config, "augment.pronoun_lexicon", pos.pronouns),
           lexicon_or(config, "augment.verb_lexicon", pos.verbs),
           lexicon_or(config, "augment.determiner_lexicon", pos.determiners)}};
}

AugmentSummary cmd_augment(const Config& config, const AugmentRequest& request) {
  require_file(request.input, "input corpus");
  if (request.output.empty()) throw ValidationError("output path is required");
  const Corpus corpus = read_corpus(request.input);
  std::map<std::size_t, TripleAnnotation> sidecar;
  if (!request.sidecar.empty()) {
    require_file(request.sidecar, "sidecar");
    sidecar = read_sidecar(request.sidecar);
  }
  const AugmentLexicons lexicons = augment_lexicons(config);

  Corpus kept = corpus;
  std::vector<SkippedSentence> filtered;
  if (config.flag("augment.filter")) {
    kept = filter_corpus(corpus, parse_capital_rule(config.str("augment.capital_rule")));
    std::set<std::size_t> survivors;
    for (const auto& s : kept.sentences) survivors.insert(s.index);
    for (const auto& s : corpus.sentences) {
      if (survivors.count(s.index) == 0) {
        filtered.push_back({s.index,
                            s.word_count() < 3 ? "filtered: fewer than three words"
                                               : "filtered: capitalized last word rule",
                            s.text});
      }
    }
  }
  if (kept.sentences.empty()) {
    throw ValidationError("every sentence was removed by the corpus filter");
  }

  AugmentSummary summary;
  summary.sentences = corpus.size();
  summary.filtered = filtered.size();
  summary.build = build_triples(kept, sidecar.empty() ? nullptr : &sidecar, lexicons,
                                config.u64("seed"));
  std::vector<SkippedSentence> report = filtered;
  report.insert(report.end(), summary.build.skipped.begin(), summary.build.skipped.end());
  std::stable_sort(report.begin(), report.end(),
                   [](const auto& a, const auto& b) { return a.index < b.index; });

  const fs::path skipped =
      request.skipped.empty() ? fs::path(request.output.string() + ".skipped.jsonl")
                              : request.skipped;
  write_text_file(request.output, triples_jsonl(summary.build.triples));
  write_text_file(skipped, skipped_jsonl(report));
  write_text_file(request.output.string() + ".config.txt", config.resolved_text());
  return summary;
}

ContrastiveData prepare_contrastive(std::span<const AugmentedTriple> triples,
                                    std::span<const StsPair> dev, bool case_fold) {
  ContrastiveData data{Vocabulary(case_fold), {}, {}};
  for (const auto& t : triples) {
    for (const auto* text : {&t.x, &t.y_plus, &t.z_plus}) data.vocab.add_all(tokenize(*text));
  }
  for (const auto& t : triples) {
    EncodedTriple e{ids_for(data.vocab, t.x), ids_for(data.vocab, t.y_plus),
                    ids_for(data.vocab, t.z_plus)};
    if (e.x.empty() || e.y_plus.empty() || e.z_plus.empty()) {
      throw ValidationError("triple with an empty view: '" + t.x + "'");
    }
    data.triples.push_back(std::move(e));
  }
  for (const auto& p : dev) {
    EncodedPair e{ids_for(data.vocab, p.s1), ids_for(data.vocab, p.s2), p.score};
    if (e.first.empty() || e.second.empty()) throw ValidationError("STS pair with an empty sentence");
    data.dev.push_back(std::move(e));
  }
  return data;
}

ContrastiveTrainConfig contrastive_settings(const Config& config) {
  ContrastiveTrainConfig c;
  c.weights = {config.real("contrastive.lambda_xy"), config.real("contrastive.lambda_xz"),
               config.real("contrastive.lambda_yz"), config.real("contrastive.temperature")};
  c.weights.validate();
  c.optimizer = adam_settings(config, "contrastive");
  c.use_adamw = use_adamw(config, "contrastive");
  c.batch_size = positive(config, "contrastive.batch_size");
  c.validation_interval = positive(config, "contrastive.validation_interval");
  c.epochs = positive(config, "contrastive.epochs");
  c.max_steps = optional_steps(config, "contrastive.max_steps");
  c.seed = config.u64("seed");
  c.single_precision = single_precision(config);
  return c;
}

Encoder initial_encoder(const Config& config, std::size_t vocab_size) {
  Rng rng = Rng(config.u64("seed")).fork(7);
  Encoder e = Encoder::init(vocab_size, positive(config, "encoder.embed_dim"),
                            parse_pooling(config.str("encoder.pooling")),
                            positive(config, "encoder.hidden_dim"),
                            config.real("contrastive.dropout"), rng);
  if (single_precision(config)) round_to_single(e.refs());
  return e;
}

ContrastiveRun run_contrastive(const Config& config, const ContrastiveData& data) {
  const ContrastiveTrainConfig settings = contrastive_settings(config);
  const Encoder init = initial_encoder(config, data.vocab.size());
  return train_contrastive(init, data.triples, data.dev, settings);
}

void apply_lambda_preset(Config& config, const std::string& preset) {
  std::array<const char*, 3> w;
  if (preset == "all") {
    w = {"1", "1", "1"};
  } else if (preset == "xy") {
    w = {"1", "0", "0"};
  } else if (preset == "xz") {
    w = {"0", "1", "0"};
  } else if (preset == "yz") {
    w = {"0", "0", "1"};
  } else {
    throw ValidationError("unknown lambda preset '" + preset + "' (all|xy|xz|yz)");
  }
  config.set("contrastive.lambda_xy", w[0]);
  config.set("contrastive.lambda_xz", w[1]);
  config.set("contrastive.lambda_yz", w[2]);
}

std::vector<ContrastiveJob> cmd_train_contrastive(Config config,
                                                  const ContrastiveRequest& request) {
  const fs::path triples_path =
      request.triples.empty() ? fs::path(config.str("data.triples")) : request.triples;
  const fs::path dev_path =
      request.dev.empty() ? fs::path(config.str("data.dev_pairs")) : request.dev;
  require_file(dev_path, "dev pairs file");
  require_file(triples_path, "triple file");
  if (request.out.empty()) throw ValidationError("output directory is required");
  config.set("data.triples", triples_path.string());
  config.set("data.dev_pairs", dev_path.string());
  if (!request.lambda_preset.empty()) apply_lambda_preset(config, request.lambda_preset);
  contrastive_settings(config);

  const auto triples = read_triples(triples_path);
  const auto dev = read_sts_pairs(dev_path);
  const ContrastiveData data = prepare_contrastive(triples, dev, config.flag("case_fold"));

  std::vector<std::pair<std::string, Config>> plan;
  if (request.dropout_sweep) {
    for (const char* p : {"0.1", "0.15", "0.2"}) {
      Config c = config;
      c.set("contrastive.dropout", p);
      plan.emplace_back(std::string("p") + p, std::move(c));
    }
  } else {
    plan.emplace_back("", config);
  }

  std::vector<ContrastiveJob> jobs;
  for (auto& [name, job_config] : plan) {
    ContrastiveJob job{name, name.empty() ? request.out : request.out / name, {}};
    job.run = run_contrastive(job_config, data);
    Json summary;
    summary["command"] = "train-contrastive";
    summary["best_step"] = job.run.best_step;
    summary["best_dev_spearman"] = job.run.best_spearman;
    summary["init_dev_spearman"] = job.run.init_spearman;
    summary["alignment_init"] = job.run.alignment_init;
    summary["alignment_best"] = job.run.alignment_best;
    summary["steps"] = job.run.steps;
    summary["triples"] = data.triples.size();
    summary["dev_pairs"] = data.dev.size();
    summary["config"] = config_json(job_config);
    write_run_files(job.dir, job_config, data.vocab, Checkpoint::capture(job.run.best.refs()),
                    contrastive_metrics_csv(job.run.history), summary);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

ClassifierData prepare_classifier(std::span<const LabeledText> train,
                                  std::span<const LabeledText> dev,
                                  std::span<const LabeledText> test, bool case_fold) {
  ClassifierData data{Vocabulary(case_fold), {}, {}, {}};
  std::vector<std::vector<std::string>> train_tokens;
  for (const auto& row : train) {
    train_tokens.push_back(tokenize(row.text));
    data.vocab.add_all(train_tokens.back());
  }
  auto encode = [&](const LabeledText& row) {
    LabeledSentence s;
    s.tokens = tokenize(row.text);
    if (s.tokens.empty()) throw ValidationError("labeled example with empty text");
    s.ids = data.vocab.ids(s.tokens);
    s.label = row.label;
    return s;
  };
  for (const auto& row : train) data.train.push_back(encode(row));
  for (const auto& row : dev) data.dev.push_back(encode(row));
  for (const auto& row : test) data.test.push_back(encode(row));
  return data;
}

ClassifierTrainConfig classifier_settings(const Config& config) {
  ClassifierTrainConfig c;
  c.optimizer = adam_settings(config, "classify");
  c.use_adamw = use_adamw(config, "classify");
  c.batch_size = positive(config, "classify.batch_size");
  c.l2 = config.real("classify.l2");
  if (c.l2 < 0.0) throw ValidationError("classify.l2 must be non-negative");
  c.dropout = config.real("classify.dropout");
  check_dropout_rate(c.dropout);
  c.validation_interval = positive(config, "classify.validation_interval");
  c.epochs = positive(config, "classify.epochs");
  c.max_steps = optional_steps(config, "classify.max_steps");
  c.seed = config.u64("seed");
  c.single_precision = single_precision(config);
  return c;
}

SentenceClassifier initial_classifier(const Config& config, std::size_t vocab_size) {
  Rng rng = Rng(config.u64("seed")).fork(7);
  SentenceClassifier m = SentenceClassifier::init(
      vocab_size, positive(config, "classify.embed_dim"), positive(config, "classify.hidden_dim"),
      config.count("classify.num_classes"), parse_variant(config.str("classify.variant")), rng);
  if (single_precision(config)) round_to_single(m.refs());
  return m;
}

std::optional<Lexicon> classifier_lexicon(const Config& config) {
  const CellVariant variant = parse_variant(config.str("classify.variant"));
  if (variant == CellVariant::standard) return std::nullopt;
  const std::string& path = config.str("classify.lexicon");
  if (path.empty()) throw ValidationError("the sifter variant needs a lexicon (classify.lexicon)");
  return Lexicon::load(path, config.flag("case_fold"));
}

ClassifierRun run_classifier(const Config& config, const ClassifierData& data,
                             const Lexicon* lexicon) {
  const ClassifierTrainConfig settings = classifier_settings(config);
  const SentenceClassifier init = initial_classifier(config, data.vocab.size());
  return train_classifier(init, data.train, data.dev, lexicon, settings);
}

ClassifySummary cmd_train_classify(Config config, const ClassifyRequest& request) {
  const fs::path train_path =
      request.train.empty() ? fs::path(config.str("data.train")) : request.train;
  const fs::path dev_path = request.dev.empty() ? fs::path(config.str("data.dev")) : request.dev;
  const fs::path test_path =
      request.test.empty() ? fs::path(config.str("data.test")) : request.test;
  require_file(train_path, "training file");
  require_file(dev_path, "dev file");
  if (!test_path.empty()) require_file(test_path, "test file");
  if (request.out.empty()) throw ValidationError("output directory is required");
  config.set("data.train", train_path.string());
  config.set("data.dev", dev_path.string());
  config.set("data.test", test_path.string());
  classifier_settings(config);
  const std::optional<Lexicon> lexicon = classifier_lexicon(config);

  const std::size_t k = config.count("classify.num_classes");
  if (k < 2) throw ValidationError("classify.num_classes must be at least 2");
  const auto train = read_labeled(train_path, k);
  const auto dev = read_labeled(dev_path, k);
  std::vector<LabeledText> test;
  if (!test_path.empty()) test = read_labeled(test_path, k);
  const ClassifierData data = prepare_classifier(train, dev, test, config.flag("case_fold"));

  std::vector<std::uint64_t> seeds = request.seeds;
  if (seeds.empty()) seeds.push_back(config.u64("seed"));
  ClassifySummary summary;
  std::vector<double> scores;
  const Lexicon* lex = lexicon ? &*lexicon : nullptr;
  for (std::uint64_t seed : seeds) {
    Config job_config = config;
    job_config.set("seed", std::to_string(seed));
    ClassifyJob job;
    job.seed = seed;
    job.dir = request.seeds.size() > 1 ? request.out / ("seed-" + std::to_string(seed))
                                       : request.out;
    job.run = run_classifier(job_config, data, lex);
    if (!data.test.empty()) job.test_accuracy = classifier_accuracy(job.run.best, data.test, lex);
    scores.push_back(job.test_accuracy.value_or(job.run.best_dev_accuracy));

    Json s;
    s["command"] = "train-classify";
    s["seed"] = seed;
    s["variant"] = to_string(job.run.best.variant);
    s["best_step"] = job.run.best_step;
    s["best_dev_accuracy"] = job.run.best_dev_accuracy;
    if (job.test_accuracy) s["test_accuracy"] = *job.test_accuracy;
    s["steps"] = job.run.steps;
    s["config"] = config_json(job_config);
    write_run_files(job.dir, job_config, data.vocab, Checkpoint::capture(job.run.best.refs()),
                    classifier_metrics_csv(job.run.history), s);
    if (lex != nullptr) {
      std::string text;
      for (const auto& t : lex->sorted_tokens()) text += t + "\n";
      write_text_file(job.dir / "lexicon.txt", text);
    }
    summary.jobs.push_back(std::move(job));
  }
  double total = 0.0;
  for (double v : scores) total += v;
  summary.mean = total / static_cast<double>(scores.size());
  summary.stddev = sample_stddev(scores, summary.mean);

  if (seeds.size() > 1) {
    Json s;
    s["command"] = "train-classify";
    s["metric"] = data.test.empty() ? "best_dev_accuracy" : "test_accuracy";
    s["seeds"] = seeds;
    s["values"] = scores;
    s["mean"] = summary.mean;
    s["stddev"] = summary.stddev;
    s["config"] = config_json(config);
    write_text_file(request.out / "summary.json", s.dump(2) + "\n");
    write_text_file(request.out / "config.txt", config.resolved_text());
  }
  return summary;
}

EvalReport cmd_eval(const EvalRequest& request) {
  const fs::path dir = request.checkpoint_dir;
  require_file(dir / "config.txt", "checkpoint config");
  require_file(request.data, "evaluation data");
  Config config;
  config.merge_file(dir / "config.txt");
  const Vocabulary vocab = Vocabulary::load(dir / "vocab.txt", config.flag("case_fold"));
  const Checkpoint checkpoint = load_checkpoint(dir / "model.sift");
  const std::string id = (dir / "model.sift").string();

  if (request.task == "sts") {
    if (checkpoint.find("proj.w") == nullptr) {
      throw ValidationError("checkpoint " + id + " does not hold a sentence encoder");
    }
    const auto pairs = read_sts_pairs(request.data);
    Encoder encoder = initial_encoder(config, vocab.size());
    checkpoint.restore(encoder.refs());
    std::vector<EncodedPair> encoded;
    for (const auto& p : pairs) {
      encoded.push_back({ids_for(vocab, p.s1), ids_for(vocab, p.s2), p.score});
    }
    return sts_eval(encoder, encoded, id);
  }
  if (request.task == "cls") {
    if (checkpoint.find("head.w") == nullptr) {
      throw ValidationError("checkpoint " + id + " does not hold a classifier");
    }
    const auto rows = read_labeled(request.data, config.count("classify.num_classes"));
    SentenceClassifier model = initial_classifier(config, vocab.size());
    checkpoint.restore(model.refs());
    std::optional<Lexicon> lexicon;
    if (model.variant == CellVariant::sifter) {
      lexicon = Lexicon::load(dir / "lexicon.txt", config.flag("case_fold"));
    }
    std::vector<LabeledSentence> data;
    for (const auto& r : rows) {
      LabeledSentence s;
      s.tokens = tokenize(r.text);
      s.ids = vocab.ids(s.tokens);
      s.label = r.label;
      data.push_back(std::move(s));
    }
    EvalReport report;
    report.metric = "accuracy";
    report.value = classifier_accuracy(model, data, lexicon ? &*lexicon : nullptr);
    report.samples = data.size();
    report.checkpoint = id;
    return report;
  }
  throw ValidationError("unknown eval task '" + request.task + "' (sts|cls)");
}

std::vector<GradcheckResult> cmd_gradcheck(const Config& config, const GradcheckRequest& request) {
  if (single_precision(config)) {
    throw ValidationError("gradcheck runs in 64-bit precision only; refusing precision=f32");
  }
  if (request.seeds == 0) throw ValidationError("gradcheck needs at least one seed");
  std::vector<GradcheckResult> out;
  for (CheckKind kind : parse_check_kinds(request.variant)) {
    for (std::size_t s = 0; s < request.seeds; ++s) {
      const std::uint64_t seed = request.seed + s;
      out.push_back({kind, seed, check_gradients(kind, request.dims, seed, request.corrupt)});
    }
  }
  return out;
}

SeedStudy cmd_seed_study(Config config, const SeedStudyRequest& request) {
  const fs::path triples_path =
      request.triples.empty() ? fs::path(config.str("data.triples")) : request.triples;
  const fs::path dev_path =
      request.dev.empty() ? fs::path(config.str("data.dev_pairs")) : request.dev;
  require_file(dev_path, "dev pairs file");
  require_file(triples_path, "triple file");
  config.set("data.triples", triples_path.string());
  config.set("data.dev_pairs", dev_path.string());
  contrastive_settings(config);
  const auto triples = read_triples(triples_path);
  const auto dev = read_sts_pairs(dev_path);
  const ContrastiveData data = prepare_contrastive(triples, dev, config.flag("case_fold"));

  std::vector<std::uint64_t> seeds = request.seeds;
  if (seeds.empty()) seeds = {1, 2, 3, 4, 5};
  SeedStudy study = seed_stability(
      [&](std::uint64_t seed) {
        Config c = config;
        c.set("seed", std::to_string(seed));
        return run_contrastive(c, data).best_spearman;
      },
      seeds);

  if (!request.out.empty()) {
    std::string csv = "seed,best_dev_spearman\n";
    for (std::size_t i = 0; i < study.seeds.size(); ++i) {
      csv += std::to_string(study.seeds[i]) + "," + format_real(study.values[i]) + "\n";
    }
    Json s;
    s["command"] = "seed-study";
    s["seeds"] = study.seeds;
    s["values"] = study.values;
    s["max"] = study.max;
    s["min"] = study.min;
    s["mean"] = study.mean;
    s["spread"] = study.spread();
    s["config"] = config_json(config);
    write_text_file(request.out / "seed_study.csv", csv);
    write_text_file(request.out / "summary.json", s.dump(2) + "\n");
    write_text_file(request.out / "config.txt", config.resolved_text());
  }
  return study;
}

}  // namespace sifter
