#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sifter/dataio.hpp"

namespace sifter {

// Small generated tasks for end-to-end checks at desk scale.

struct SentimentTaskOptions {
  std::size_t train = 2000;
  std::size_t dev = 500;
  std::size_t test = 500;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  std::uint64_t seed = 0;
};

/// Binary sentiment: every sentence is mostly neutral filler with one to
/// three polarity words planted at random positions. The majority polarity
/// decides the label (1 positive, 0 negative).
struct SentimentTask {
  std::vector<LabeledText> train, dev, test;
  std::vector<std::string> polarity_words;  // the task-relevant lexicon
};

SentimentTask make_sentiment_task(const SentimentTaskOptions& options = {});

struct TopicTaskOptions {
  std::size_t topics = 8;
  std::size_t words_per_topic = 30;
  std::size_t train = 2000;
  std::size_t dev_pairs = 300;
  double primary_share = 0.75;  // probability a content word comes from the main topic
  std::size_t min_extra_function_words = 0;
  std::size_t max_extra_function_words = 8;
  std::uint64_t seed = 0;
};

/// Sentences built from topic vocabularies around a fixed clause template,
/// with the clause's subject/verb/object recorded as a sidecar annotation.
/// Dev pairs are scored by the overlap of the two sentences' topic mixtures.
struct TopicTask {
  std::vector<std::string> corpus;         // one sentence per entry
  std::vector<TripleAnnotation> sidecar;   // index = position in `corpus`
  std::vector<StsPair> dev;
};

TopicTask make_topic_task(const TopicTaskOptions& options = {});

std::string sidecar_jsonl(const std::vector<TripleAnnotation>& annotations);

}  // namespace sifter
