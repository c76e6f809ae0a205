// Command-line front end for the augmentation, training and evaluation
// pipelines. Exit codes: 0 success, 1 validation, 2 I/O, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sifter/dataio.hpp"
#include "sifter/error.hpp"
#include "sifter/pipelines.hpp"

namespace {

using namespace sifter;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;

  Config resolve() const { return resolve_config(config_path, overrides); }
};

void print_contrastive(const ContrastiveJob& job) {
  const auto& r = job.run;
  std::cout << (job.name.empty() ? "" : job.name + ": ") << "best dev spearman "
            << format_real(r.best_spearman) << " at step " << r.best_step << " of " << r.steps
            << " (init " << format_real(r.init_spearman) << "), alignment "
            << format_real(r.alignment_init) << " -> " << format_real(r.alignment_best)
            << ", saved to " << job.dir.string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Contrastive sentence embeddings and lexicon-gated LSTM classifiers"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path,
                 std::string("Config file (default: $") + kConfigEnv + ")");
  app.add_option("--set", g.overrides, "Override a config key, key=value (repeatable)");

  AugmentRequest aug;
  auto* augment = app.add_subcommand("augment", "Build (x, y+, z+) triples from a corpus");
  augment->add_option("--input", aug.input, "Corpus: plain text or JSON lines")->required();
  augment->add_option("--sidecar", aug.sidecar, "Triple annotations, JSON lines");
  augment->add_option("--output", aug.output, "Triple file to write")->required();
  augment->add_option("--skipped", aug.skipped, "Skip report (default <output>.skipped.jsonl)");

  ContrastiveRequest con;
  auto* contrastive = app.add_subcommand("train-contrastive", "Train the sentence encoder");
  contrastive->add_option("--triples", con.triples, "Triple file (or data.triples)");
  contrastive->add_option("--dev", con.dev, "Dev STS pairs (or data.dev_pairs)");
  contrastive->add_option("--out", con.out, "Output directory")->required();
  contrastive->add_option("--lambda", con.lambda_preset, "Loss weight preset: all|xy|xz|yz");
  contrastive->add_flag("--dropout-sweep", con.dropout_sweep,
                        "Run p = 0.1, 0.15 and 0.2 into p<value>/ subdirectories");

  ClassifyRequest cls;
  std::string variant, lexicon, cls_seeds;
  auto* classify = app.add_subcommand("train-classify", "Train a sentence classifier");
  classify->add_option("--train", cls.train, "Labeled JSON lines (or data.train)");
  classify->add_option("--dev", cls.dev, "Labeled JSON lines (or data.dev)");
  classify->add_option("--test", cls.test, "Optional labeled test split");
  classify->add_option("--out", cls.out, "Output directory")->required();
  classify->add_option("--variant", variant, "standard|sifter");
  classify->add_option("--lexicon", lexicon, "Task lexicon for the sifter variant");
  classify->add_option("--seeds", cls_seeds, "Comma-separated seeds; one run per seed");

  EvalRequest ev;
  std::string eval_csv;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  eval->add_option("--checkpoint", ev.checkpoint_dir, "Run directory")->required();
  eval->add_option("--task", ev.task, "sts|cls")->required();
  eval->add_option("--data", ev.data, "STS pairs or labeled JSON lines")->required();
  eval->add_option("--csv", eval_csv, "Also write the report as CSV");

  GradcheckRequest gc;
  std::string gc_csv;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  gradcheck->add_option("--variant", gc.variant,
                        "standard|sifter|contrastive|contrastive-mean|all");
  gradcheck->add_option("--input-dim", gc.dims.input_dim);
  gradcheck->add_option("--hidden-dim", gc.dims.hidden_dim);
  gradcheck->add_option("--length", gc.dims.length);
  gradcheck->add_option("--classes", gc.dims.classes);
  gradcheck->add_option("--batch", gc.dims.batch);
  gradcheck->add_option("--seed", gc.seed);
  gradcheck->add_option("--seeds", gc.seeds, "Number of consecutive seeds");
  gradcheck->add_option("--csv", gc_csv, "Write parameter,max_rel_error rows");
  gradcheck->add_flag("--corrupt-backward", gc.corrupt)->group("");  // test hook

  SeedStudyRequest study;
  std::string study_seeds = "1,2,3,4,5";
  auto* seed_study = app.add_subcommand("seed-study", "Best dev Spearman across seeds");
  seed_study->add_option("--triples", study.triples, "Triple file (or data.triples)");
  seed_study->add_option("--dev", study.dev, "Dev STS pairs (or data.dev_pairs)");
  seed_study->add_option("--seeds", study_seeds, "Comma-separated seeds");
  seed_study->add_option("--out", study.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (augment->parsed()) {
    const AugmentSummary s = cmd_augment(g.resolve(), aug);
    std::cout << "read " << s.sentences << " sentences, filtered " << s.filtered << ", wrote "
              << s.build.triples.size() << " triples, skipped " << s.build.skipped.size()
              << "\n";
  } else if (contrastive->parsed()) {
    for (const auto& job : cmd_train_contrastive(g.resolve(), con)) print_contrastive(job);
  } else if (classify->parsed()) {
    Config config = g.resolve();
    if (!variant.empty()) config.set("classify.variant", variant);
    if (!lexicon.empty()) config.set("classify.lexicon", lexicon);
    if (!cls_seeds.empty()) cls.seeds = parse_seed_list(cls_seeds);
    const ClassifySummary s = cmd_train_classify(config, cls);
    for (const auto& job : s.jobs) {
      std::cout << "seed " << job.seed << ": best dev accuracy "
                << format_real(job.run.best_dev_accuracy) << " at step " << job.run.best_step;
      if (job.test_accuracy) std::cout << ", test accuracy " << format_real(*job.test_accuracy);
      std::cout << "\n";
    }
    if (s.jobs.size() > 1) {
      std::cout << "mean " << format_real(s.mean) << " stddev " << format_real(s.stddev) << "\n";
    }
  } else if (eval->parsed()) {
    const EvalReport report = cmd_eval(ev);
    report.print_text(std::cout);
    if (!eval_csv.empty()) {
      std::ofstream out(eval_csv);
      if (!out) throw IoError("cannot write " + eval_csv);
      report.print_csv(out);
    }
  } else if (gradcheck->parsed()) {
    const auto results = cmd_gradcheck(g.resolve(), gc);
    bool ok = true;
    std::ofstream csv;
    if (!gc_csv.empty()) {
      csv.open(gc_csv);
      if (!csv) throw IoError("cannot write " + gc_csv);
      csv << "variant,seed,parameter,max_rel_error\n";
    }
    for (const auto& r : results) {
      std::cout << "== " << to_string(r.kind) << " seed " << r.seed << "\n";
      r.report.print_table(std::cout);
      ok = ok && r.report.passed;
      if (csv.is_open()) {
        for (const auto& e : r.report.entries) {
          csv << to_string(r.kind) << "," << r.seed << "," << e.name << ","
              << format_real(e.max_rel_error) << "\n";
        }
      }
    }
    if (!ok) throw NumericError("gradient check failed");
    std::cout << "gradient check passed (" << results.size() << " runs)\n";
  } else if (seed_study->parsed()) {
    study.seeds = parse_seed_list(study_seeds);
    const SeedStudy s = cmd_seed_study(g.resolve(), study);
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
      std::cout << "seed " << s.seeds[i] << ": " << format_real(s.values[i]) << "\n";
    }
    std::cout << "max " << format_real(s.max) << " min " << format_real(s.min) << " mean "
              << format_real(s.mean) << " spread " << format_real(s.spread()) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
