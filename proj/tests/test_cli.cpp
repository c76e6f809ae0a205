#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sifter/checkpoint.hpp"
#include "sifter/config.hpp"
#include "sifter/dataio.hpp"
#include "sifter/error.hpp"
#include "fixtures.hpp"
#include "sifter/pipelines.hpp"
#include "sifter/synthetic.hpp"

using namespace sifter;
namespace fs = std::filesystem;

namespace {

using fixtures::kApple;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / "scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string command =
      std::string("\"") + SIFTER_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small contrastive and classification fixtures on disk.
struct Workspace {
  fs::path dir, triples, dev, train, cls_dev, lexicon;

  explicit Workspace(const std::string& name) : dir(scratch(name)) {
    TopicTaskOptions o;
    o.train = 120;
    o.dev_pairs = 40;
    const TopicTask topic = make_topic_task(o);
    std::map<std::size_t, TripleAnnotation> sidecar;
    for (const auto& a : topic.sidecar) sidecar[a.index] = a;
    const TripleBuild build = build_triples(Corpus::from_lines(topic.corpus), &sidecar,
                                            {default_deletion_lexicon(), default_pos_lexicons()}, 0);
    triples = dir / "triples.jsonl";
    dev = dir / "dev.jsonl";
    write_text_file(triples, triples_jsonl(build.triples));
    write_text_file(dev, sts_pairs_jsonl(topic.dev));

    SentimentTaskOptions s;
    s.train = 80;
    s.dev = 30;
    s.test = 30;
    s.min_length = 5;
    s.max_length = 8;
    const SentimentTask task = make_sentiment_task(s);
    train = dir / "train.jsonl";
    cls_dev = dir / "cls_dev.jsonl";
    lexicon = dir / "polarity.txt";
    write_text_file(train, labeled_jsonl(task.train));
    write_text_file(cls_dev, labeled_jsonl(task.dev));
    std::string words;
    for (const auto& w : task.polarity_words) words += w + "\n";
    write_text_file(lexicon, words);
  }
};

Config small_config() {
  Config c;
  for (const char* kv : {"encoder.embed_dim=8", "encoder.hidden_dim=8", "contrastive.batch_size=16",
                         "contrastive.validation_interval=4", "contrastive.learning_rate=1e-3",
                         "classify.embed_dim=8", "classify.hidden_dim=6",
                         "classify.batch_size=16", "classify.validation_interval=3",
                         "classify.learning_rate=1e-2"}) {
    c.apply_override(kv);
  }
  return c;
}

}  // namespace

TEST_CASE("config precedence and validation") {
  const fs::path dir = scratch("config");
  const fs::path file = dir / "run.conf";
  write_text_file(file, "# comment\nseed = 4\ncontrastive.temperature = 0.1\n\nclassify.variant = sifter\n");

  const Config c = resolve_config(file.string(), {"seed=9"});
  CHECK(c.u64("seed") == 9);
  CHECK(c.real("contrastive.temperature") == 0.1);
  CHECK(c.str("classify.variant") == "sifter");
  CHECK(c.real("contrastive.dropout") == 0.15);
  CHECK(c.count("contrastive.batch_size") == 64);
  CHECK(c.count("classify.batch_size") == 32);
  CHECK(c.real("classify.l2") == 1e-7);
  CHECK(c.flag("case_fold"));

  setenv(kConfigEnv, file.c_str(), 1);
  CHECK(resolve_config("", {}).u64("seed") == 4);
  unsetenv(kConfigEnv);
  CHECK(resolve_config("", {}).u64("seed") == 0);

  Config bad;
  try {
    bad.merge_text("seed = 1\nencoder.widht = 3\n", "x.conf");
    FAIL("expected an unknown-key error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("x.conf:2") != std::string::npos);
  }
  CHECK_THROWS_AS(bad.apply_override("nokey"), ValidationError);
  CHECK_THROWS_AS(bad.apply_override("mystery=1"), ValidationError);
  bad.set("seed", "abc");
  CHECK_THROWS_AS(bad.u64("seed"), ValidationError);
  CHECK_THROWS_AS(resolve_config((dir / "missing.conf").string(), {}), IoError);

  const std::string text = Config().resolved_text();
  CHECK(text.find("contrastive.temperature = 0.05\n") != std::string::npos);
  Config round;
  round.merge_text(text);
  CHECK(round.values() == Config().values());
}

TEST_CASE("shipped configs parse") {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(SIFTER_SOURCE_DIR) / "data" / "configs")) {
    CAPTURE(entry.path().string());
    Config c;
    CHECK_NOTHROW(c.merge_file(entry.path()));
    CHECK_NOTHROW(contrastive_settings(c));
    CHECK_NOTHROW(classifier_settings(c));
    ++seen;
  }
  CHECK(seen == 4);
  Config ablation;
  ablation.merge_file(fs::path(SIFTER_SOURCE_DIR) / "data" / "configs" / "contrastive-ablation.conf");
  CHECK(ablation.real("contrastive.learning_rate") == 3e-5);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(1);
  Tensor a = Tensor::matrix(3, 4), b = Tensor::vector(5);
  for (double& x : a.data()) x = rng.normal() * 1e-300;
  for (double& x : b.data()) x = rng.uniform(-1e6, 1e6);
  a[0] = -0.0;
  const Checkpoint ck = Checkpoint::capture({{"w", &a}, {"b", &b}});
  const std::string bytes = encode_checkpoint(ck);
  CHECK(bytes.substr(0, 4) == "SIFT");
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back == ck);
  CHECK(std::signbit(back.find("w")->at(0, 0)));
  CHECK(encode_checkpoint(back) == bytes);

  const fs::path path = scratch("checkpoint") / "m.sift";
  save_checkpoint(ck, path);
  CHECK(load_checkpoint(path) == ck);

  std::string corrupt = bytes;
  corrupt[corrupt.size() - 20] ^= 0x01;
  try {
    decode_checkpoint(corrupt);
    FAIL("expected a checksum error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint("NOPE" + bytes.substr(4)), ValidationError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ValidationError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(path.parent_path() / "absent.sift"), IoError);

  Tensor a2 = Tensor::matrix(3, 4), b2 = Tensor::vector(5);
  ck.restore({{"w", &a2}, {"b", &b2}});
  CHECK(a2 == a);
  Tensor wrong = Tensor::vector(4);
  CHECK_THROWS_AS(ck.restore({{"w", &wrong}, {"b", &b2}}), ShapeError);
  CHECK_THROWS_AS(ck.restore({{"x", &a2}, {"b", &b2}}), ValidationError);
}

TEST_CASE("data ingestion errors carry line numbers") {
  const fs::path dir = scratch("dataio");
  write_text_file(dir / "labels.jsonl",
                  "{\"text\": \"fine\", \"label\": 1}\n{\"text\": \"bad\", \"label\": 2}\n");
  try {
    read_labeled(dir / "labels.jsonl", 2);
    FAIL("expected a label error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("labels.jsonl:2") != std::string::npos);
    CHECK(std::string(e.what()).find("outside 0..1") != std::string::npos);
  }

  write_text_file(dir / "sts.jsonl", "{\"s1\": \"a\", \"s2\": \"b\", \"score\": 1}\n{\"s1\": \"a\"}\n");
  try {
    read_sts_pairs(dir / "sts.jsonl");
    FAIL("expected a format error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("sts.jsonl:2") != std::string::npos);
  }

  write_text_file(dir / "empty.txt", "\n\n");
  CHECK_THROWS_AS(read_corpus(dir / "empty.txt"), ValidationError);
  CHECK_THROWS_AS(read_corpus(dir / "nowhere.txt"), IoError);

  write_text_file(dir / "corpus.jsonl", "{\"text\": \"One two three.\"}\n\n{\"text\": \"Four five six.\"}\n");
  const Corpus c = read_corpus(dir / "corpus.jsonl");
  REQUIRE(c.size() == 2);
  CHECK(c.sentences[1].index == 1);

  write_text_file(dir / "side.jsonl", "{\"index\": 0, \"triples\": [[\"a\", \"b\", \"c\"]]}\n"
                                      "{\"index\": 0, \"triples\": []}\n");
  CHECK_THROWS_AS(read_sidecar(dir / "side.jsonl"), ValidationError);

  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(std::nan("")) == "nan");
}

TEST_CASE("augment pipeline") {
  const fs::path dir = scratch("augment");
  write_text_file(dir / "corpus.txt", kApple + "\n");
  const AugmentRequest req{dir / "corpus.txt", {}, dir / "triples.jsonl", {}};
  const AugmentSummary s = cmd_augment(Config(), req);
  CHECK(s.build.triples.size() == 1);
  const auto rows = read_triples(dir / "triples.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].y_plus ==
        fixtures::kAppleBackbone);
  CHECK(rows[0].z_plus == fixtures::kAppleDeletion);
  CHECK(fs::exists(dir / "triples.jsonl.skipped.jsonl"));
  CHECK(fs::exists(dir / "triples.jsonl.config.txt"));

  const std::string first = read_text_file(dir / "triples.jsonl");
  cmd_augment(Config(), req);
  CHECK(read_text_file(dir / "triples.jsonl") == first);

  write_text_file(dir / "empty.txt", "");
  CHECK_THROWS_AS(cmd_augment(Config(), {dir / "empty.txt", {}, dir / "e.jsonl", {}}), ValidationError);
}

TEST_CASE("contrastive pipeline and eval round trip") {
  const Workspace ws("contrastive");
  Config config = small_config();
  config.set("contrastive.max_steps", "12");

  const auto jobs = cmd_train_contrastive(config, {ws.triples, ws.dev, ws.dir / "run", "", false});
  REQUIRE(jobs.size() == 1);
  for (const char* f : {"model.sift", "vocab.txt", "config.txt", "metrics.csv", "summary.json"}) {
    CHECK(fs::exists(ws.dir / "run" / f));
  }
  CHECK(read_text_file(ws.dir / "run" / "metrics.csv").rfind("step,loss,dev_spearman\n", 0) == 0);
  const auto summary = nlohmann::json::parse(read_text_file(ws.dir / "run" / "summary.json"));
  CHECK(summary.contains("config"));

  const EvalReport report = cmd_eval({ws.dir / "run", "sts", ws.dev});
  CHECK(report.value == jobs[0].run.best_spearman);
  CHECK_THROWS_AS(cmd_eval({ws.dir / "run", "sts", ws.train}), ValidationError);
  CHECK_THROWS_AS(cmd_eval({ws.dir / "run", "cls", ws.cls_dev}), ValidationError);

  Config single = config;
  apply_lambda_preset(single, "xy");
  CHECK(single.real("contrastive.lambda_xy") == 1.0);
  CHECK(single.real("contrastive.lambda_xz") == 0.0);
  CHECK(single.real("contrastive.lambda_yz") == 0.0);
  CHECK_THROWS_AS(apply_lambda_preset(single, "zz"), ValidationError);

  config.set("contrastive.max_steps", "2");
  const auto sweep = cmd_train_contrastive(config, {ws.triples, ws.dev, ws.dir / "sweep", "", true});
  REQUIRE(sweep.size() == 3);
  for (const char* p : {"p0.1", "p0.15", "p0.2"}) CHECK(fs::exists(ws.dir / "sweep" / p / "model.sift"));

  CHECK_THROWS_AS(cmd_train_contrastive(config, {ws.triples, ws.dir / "nope.jsonl", ws.dir / "x", "", false}),
                  IoError);
  CHECK_FALSE(fs::exists(ws.dir / "x" / "model.sift"));
}

TEST_CASE("classifier pipeline") {
  const Workspace ws("classify");
  Config config = small_config();
  config.set("classify.max_steps", "10");

  ClassifyRequest req{ws.train, ws.cls_dev, {}, ws.dir / "std", {}};
  const ClassifySummary standard = cmd_train_classify(config, req);
  REQUIRE(standard.jobs.size() == 1);
  CHECK(read_text_file(ws.dir / "std" / "metrics.csv").rfind("step,train_loss,dev_accuracy\n", 0) == 0);
  const EvalReport report = cmd_eval({ws.dir / "std", "cls", ws.cls_dev});
  CHECK(report.value == standard.jobs[0].run.best_dev_accuracy);

  // The sifter variant with an empty lexicon follows the standard trajectory.
  write_text_file(ws.dir / "empty.txt", "# nothing\n");
  Config gated = config;
  gated.set("classify.variant", "sifter");
  gated.set("classify.lexicon", (ws.dir / "empty.txt").string());
  const ClassifySummary same = cmd_train_classify(gated, {ws.train, ws.cls_dev, {}, ws.dir / "gated", {}});
  CHECK(read_text_file(ws.dir / "gated" / "metrics.csv") == read_text_file(ws.dir / "std" / "metrics.csv"));
  CHECK(read_text_file(ws.dir / "gated" / "model.sift") == read_text_file(ws.dir / "std" / "model.sift"));
  CHECK(same.jobs[0].run.step_losses == standard.jobs[0].run.step_losses);

  Config missing = config;
  missing.set("classify.variant", "sifter");
  CHECK_THROWS_AS(cmd_train_classify(missing, req), ValidationError);

  Config multi = config;
  multi.set("classify.variant", "sifter");
  multi.set("classify.lexicon", ws.lexicon.string());
  const ClassifySummary seeds =
      cmd_train_classify(multi, {ws.train, ws.cls_dev, ws.cls_dev, ws.dir / "multi", {1, 2, 3}});
  CHECK(seeds.jobs.size() == 3);
  CHECK(fs::exists(ws.dir / "multi" / "seed-2" / "lexicon.txt"));
  const auto summary = nlohmann::json::parse(read_text_file(ws.dir / "multi" / "summary.json"));
  CHECK(summary.contains("mean"));
  CHECK(summary.contains("stddev"));
  const EvalReport sifter_eval = cmd_eval({ws.dir / "multi" / "seed-1", "cls", ws.cls_dev});
  CHECK(sifter_eval.value == seeds.jobs[0].run.best_dev_accuracy);
}

TEST_CASE("gradcheck and seed study pipelines") {
  GradcheckRequest req;
  req.seeds = 2;
  const auto results = cmd_gradcheck(Config(), req);
  CHECK(results.size() == 8);
  for (const auto& r : results) CHECK(r.report.passed);

  req.corrupt = true;
  req.variant = "sifter";
  req.seeds = 1;
  CHECK_FALSE(cmd_gradcheck(Config(), req).front().report.passed);

  Config f32;
  f32.set("precision", "f32");
  CHECK_THROWS_AS(cmd_gradcheck(f32, GradcheckRequest{}), ValidationError);

  CHECK(parse_seed_list("3,1,2") == std::vector<std::uint64_t>{3, 1, 2});
  CHECK_THROWS_AS(parse_seed_list("1,1"), ValidationError);
  CHECK_THROWS_AS(parse_seed_list("1,x"), ValidationError);

  const Workspace ws("study");
  Config config = small_config();
  config.set("contrastive.max_steps", "4");
  const SeedStudy s = cmd_seed_study(config, {ws.triples, ws.dev, ws.dir / "study", {1, 2}});
  CHECK(s.values.size() == 2);
  CHECK(read_text_file(ws.dir / "study" / "seed_study.csv").rfind("seed,best_dev_spearman\n", 0) == 0);
}

TEST_CASE("command-line exit codes and determinism") {
  const Workspace ws("process");
  const fs::path log = ws.dir / "log.txt";
  write_text_file(ws.dir / "corpus.txt", kApple + "\nShe reads the book daily.\n");

  const std::string augment = "augment --input \"" + (ws.dir / "corpus.txt").string() + "\" --output \"";
  CHECK(run_cli(augment + (ws.dir / "a.jsonl").string() + "\"", log) == 0);
  CHECK(run_cli(augment + (ws.dir / "b.jsonl").string() + "\"", log) == 0);
  CHECK(read_text_file(ws.dir / "a.jsonl") == read_text_file(ws.dir / "b.jsonl"));

  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("no-such-command", log) == 1);
  CHECK(run_cli("augment --input \"" + (ws.dir / "absent.txt").string() + "\" --output x", log) == 2);
  CHECK(run_cli("--set bogus=1 gradcheck", log) == 1);

  CHECK(run_cli("gradcheck --variant standard", log) == 0);
  CHECK(run_cli("gradcheck --variant sifter --corrupt-backward", log) == 3);
  CHECK(run_cli("--set precision=f32 gradcheck", log) == 1);
  CHECK(read_text_file(log).find("64-bit") != std::string::npos);

  const std::string small = "--set encoder.embed_dim=8 --set encoder.hidden_dim=8 "
                            "--set contrastive.max_steps=3 --set contrastive.batch_size=16 ";
  CHECK(run_cli(small + "train-contrastive --triples \"" + ws.triples.string() + "\" --dev \"" +
                    (ws.dir / "missing.jsonl").string() + "\" --out \"" + (ws.dir / "m").string() + "\"",
                log) == 2);
  CHECK_FALSE(fs::exists(ws.dir / "m" / "model.sift"));

  CHECK(run_cli(small + "train-contrastive --triples \"" + ws.triples.string() + "\" --dev \"" +
                    ws.dev.string() + "\" --out \"" + (ws.dir / "c").string() + "\"",
                log) == 0);
  CHECK(run_cli("eval --task sts --checkpoint \"" + (ws.dir / "c").string() + "\" --data \"" +
                    ws.train.string() + "\"",
                log) == 1);

  std::string bytes = read_text_file(ws.dir / "c" / "model.sift");
  bytes[bytes.size() - 12] ^= 0x10;
  write_text_file(ws.dir / "c" / "model.sift", bytes);
  CHECK(run_cli("eval --task sts --checkpoint \"" + (ws.dir / "c").string() + "\" --data \"" +
                    ws.dev.string() + "\"",
                log) == 1);
  CHECK(read_text_file(log).find("checksum") != std::string::npos);

  CHECK(run_cli("train-classify --variant sifter --train \"" + ws.train.string() + "\" --dev \"" +
                    ws.cls_dev.string() + "\" --out \"" + (ws.dir / "k").string() + "\"",
                log) == 1);
}
