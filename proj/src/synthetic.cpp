#include "sifter/synthetic.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

#include "sifter/error.hpp"

namespace sifter {
namespace {

const std::vector<std::string> kPositive = {
    "good",     "great",     "excellent", "wonderful", "superb",    "delightful",
    "lovely",   "brilliant", "charming",  "enjoyable", "pleasant",  "fantastic"};
const std::vector<std::string> kNegative = {
    "bad",  "awful", "terrible", "horrible", "dreadful", "boring",
    "dull", "poor",  "mediocre", "painful",  "annoying", "lousy"};
const std::vector<std::string> kFiller = {
    "the",     "a",       "movie",    "film",     "story",   "plot",     "actor",   "scene",
    "it",      "was",     "is",       "of",       "in",      "on",       "with",    "this",
    "that",    "director", "script",  "music",    "camera",  "ending",   "opening", "cast",
    "we",      "they",    "watched",  "saw",      "felt",    "seemed",   "about",   "after",
    "before",  "during",  "some",     "many",     "most",    "every",    "time",    "night",
    "city",    "house",   "family",   "friend",   "character", "dialogue", "minutes", "hour",
    "second",  "third",   "sequel",   "version",  "studio",  "budget",   "screen",  "audience",
    "critic",  "review",  "season",   "episode",  "series",  "role",     "voice",   "score",
    "to",      "from",    "by",       "as",       "at",      "for",      "there",   "here",
    "then",    "again",   "also",     "just",     "still",   "really",   "quite",   "very"};

const std::vector<std::string> kFunctionWords = {"the", "a",   "an",  "and",     "but",
                                                 "or",  "yet", "because", "while"};

const std::array<const char*, 12> kPrefixes = {"ba", "ke", "mi", "do", "fu", "lo",
                                               "ri", "sa", "te", "vo", "zu", "gi"};
constexpr std::string_view kConsonants = "nrlmtkspdvg";
constexpr std::string_view kVowels = "aeiou";

std::string topic_word(std::size_t topic, std::size_t j) {
  std::string w = topic < kPrefixes.size() ? kPrefixes[topic] : "x" + std::to_string(topic);
  w += kConsonants[j % kConsonants.size()];
  w += kVowels[(j / kConsonants.size()) % kVowels.size()];
  if (j >= kConsonants.size() * kVowels.size()) {
    w += std::to_string(j / (kConsonants.size() * kVowels.size()));
  }
  return w;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

LabeledText sentiment_sentence(Rng& rng, const SentimentTaskOptions& o) {
  const std::size_t length = o.min_length + rng.below(o.max_length - o.min_length + 1);
  std::vector<std::string> words(length);
  for (auto& w : words) w = kFiller[rng.below(kFiller.size())];
  const std::size_t label = rng.below(2);
  const std::size_t planted = 1 + rng.below(3);
  std::vector<std::size_t> positions(length);
  for (std::size_t i = 0; i < length; ++i) positions[i] = i;
  rng.shuffle(positions);
  for (std::size_t k = 0; k < planted; ++k) {
    // With three planted words the last one disagrees, so the majority wins.
    const bool positive = (k == 2) ? label == 0 : label == 1;
    const auto& pool = positive ? kPositive : kNegative;
    words[positions[k]] = pool[rng.below(pool.size())];
  }
  return {join(words) + " .", label};
}

struct TopicSentence {
  std::string text;
  TripleAnnotation annotation;
  std::vector<double> mixture;  // share of content words per topic
};

TopicSentence topic_sentence(Rng& rng, const TopicTaskOptions& o, std::size_t primary,
                             std::size_t secondary) {
  constexpr std::size_t kContent = 7;
  std::vector<std::string> content(kContent);
  std::vector<double> mixture(o.topics, 0.0);
  for (auto& w : content) {
    const std::size_t topic = rng.uniform() < o.primary_share ? primary : secondary;
    w = topic_word(topic, rng.below(o.words_per_topic));
    mixture[topic] += 1.0 / kContent;
  }
  // The <s> <v> the <o> and <c> <c> because <c> <c> . plus a varying number of
  // extra articles and conjunctions scattered after the first word.
  std::vector<std::string> words = {"The", content[0], content[1], "the",     content[2],
                                    "and", content[3], content[4], "because", content[5],
                                    content[6]};
  const std::size_t extra = o.min_extra_function_words +
                            rng.below(o.max_extra_function_words - o.min_extra_function_words + 1);
  for (std::size_t k = 0; k < extra; ++k) {
    const auto at = words.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(words.size() - 1));
    words.insert(at, kFunctionWords[rng.below(kFunctionWords.size())]);
  }
  TopicSentence s;
  s.text = join(words) + ".";
  s.annotation.triples.push_back(Triple::from_strings(content[0], content[1], content[2]));
  s.mixture = std::move(mixture);
  return s;
}

std::size_t other_topic(Rng& rng, std::size_t topics, std::size_t avoid) {
  const std::size_t t = rng.below(topics - 1);
  return t >= avoid ? t + 1 : t;
}

}  // namespace

SentimentTask make_sentiment_task(const SentimentTaskOptions& options) {
  if (options.min_length < 3 || options.max_length < options.min_length) {
    throw ValidationError("sentiment task needs 3 <= min_length <= max_length");
  }
  Rng root(options.seed);
  SentimentTask task;
  Rng train_rng = root.fork(1), dev_rng = root.fork(2), test_rng = root.fork(3);
  for (std::size_t i = 0; i < options.train; ++i) task.train.push_back(sentiment_sentence(train_rng, options));
  for (std::size_t i = 0; i < options.dev; ++i) task.dev.push_back(sentiment_sentence(dev_rng, options));
  for (std::size_t i = 0; i < options.test; ++i) task.test.push_back(sentiment_sentence(test_rng, options));
  task.polarity_words = kPositive;
  task.polarity_words.insert(task.polarity_words.end(), kNegative.begin(), kNegative.end());
  return task;
}

TopicTask make_topic_task(const TopicTaskOptions& o) {
  if (o.max_extra_function_words < o.min_extra_function_words) {
    throw ValidationError("topic task needs min_extra_function_words <= max_extra_function_words");
  }
  if (o.topics < 2 || o.words_per_topic == 0) {
    throw ValidationError("topic task needs at least two topics and one word per topic");
  }
  Rng root(o.seed);
  Rng train_rng = root.fork(1);
  Rng dev_rng = root.fork(2);
  TopicTask task;
  for (std::size_t i = 0; i < o.train; ++i) {
    const std::size_t a = train_rng.below(o.topics);
    const std::size_t b = other_topic(train_rng, o.topics, a);
    TopicSentence s = topic_sentence(train_rng, o, a, b);
    s.annotation.index = i;
    task.corpus.push_back(std::move(s.text));
    task.sidecar.push_back(std::move(s.annotation));
  }
  for (std::size_t i = 0; i < o.dev_pairs; ++i) {
    const std::size_t a = dev_rng.below(o.topics);
    const std::size_t b = other_topic(dev_rng, o.topics, a);
    std::size_t c = a, d = b;
    switch (dev_rng.below(3)) {
      case 0: break;                                           // same mixture
      case 1: d = other_topic(dev_rng, o.topics, a); break;    // shared main topic
      default:                                                 // unrelated
        c = dev_rng.below(o.topics);
        d = other_topic(dev_rng, o.topics, c);
        break;
    }
    const TopicSentence s1 = topic_sentence(dev_rng, o, a, b);
    const TopicSentence s2 = topic_sentence(dev_rng, o, c, d);
    double overlap = 0.0;
    for (std::size_t t = 0; t < o.topics; ++t) overlap += std::min(s1.mixture[t], s2.mixture[t]);
    task.dev.push_back({s1.text, s2.text, 5.0 * overlap});
  }
  return task;
}

std::string sidecar_jsonl(const std::vector<TripleAnnotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) {
    nlohmann::ordered_json row;
    row["index"] = a.index;
    auto triples = nlohmann::ordered_json::array();
    for (const auto& t : a.triples) {
      triples.push_back({join(t.subject), join(t.relation), join(t.object)});
    }
    row["triples"] = std::move(triples);
    out += row.dump() + "\n";
  }
  return out;
}

}  // namespace sifter
