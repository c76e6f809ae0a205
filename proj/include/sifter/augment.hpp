#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sifter/lexicon.hpp"
#include "sifter/numerics.hpp"

namespace sifter {

/// Whitespace split, then leading/trailing punctuation peeled off as
/// separate tokens. Internal punctuation stays (don't, well-known), and a
/// trailing period stays attached to abbreviations that already contain one
/// (U.S., e.g.).
std::vector<std::string> tokenize(std::string_view text);

/// Single spaces between tokens; none before punctuation or after an opening
/// bracket.
std::string detokenize(std::span<const std::string> tokens);

bool is_word_token(std::string_view token);

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;
  std::size_t index = 0;  // position in the source corpus

  static Sentence parse(std::string text, std::size_t index = 0);
  std::size_t word_count() const;
};

struct Corpus {
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  static Corpus from_lines(const std::vector<std::string>& lines);
};

enum class CapitalRule {
  initial,    // first character uppercase
  all_upper,  // every letter uppercase
};

CapitalRule parse_capital_rule(const std::string& text);
std::string to_string(CapitalRule rule);

/// Drops sentences with fewer than three word tokens, and every sentence
/// whose last word is capitalized together with the sentence after it.
Corpus filter_corpus(const Corpus& corpus, CapitalRule rule = CapitalRule::initial);

struct Triple {
  std::vector<std::string> subject;
  std::vector<std::string> relation;
  std::vector<std::string> object;

  static Triple from_strings(std::string_view subject, std::string_view relation,
                             std::string_view object);
  /// "subject relation object." with single spaces.
  std::string render() const;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleAnnotation {
  std::size_t index = 0;
  std::vector<Triple> triples;
};

/// Throws ValidationError unless every triple's tokens occur in the sentence
/// as an order-preserving subsequence.
void validate_annotation(const Sentence& sentence, const TripleAnnotation& annotation);

struct BackboneResult {
  std::string text;
  std::size_t chosen = 0;
};

/// Appends one uniformly chosen candidate triple. Returns nothing when there
/// is no candidate, so the caller can flag and skip the sentence.
std::optional<BackboneResult> add_backbone(const Sentence& sentence,
                                           std::span<const Triple> candidates, Rng& rng);

struct DeletionResult {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> deleted;
  bool empty() const { return tokens.empty(); }
};

DeletionResult delete_useless(const Sentence& sentence, const Lexicon& deletion);

struct PosLexicons {
  Lexicon pronouns;
  Lexicon verbs;
  Lexicon determiners;
};

/// Shallow subject-verb-object pattern: the first pronoun or capitalized
/// non-determiner word, the first verb after it, and the first noun-like word
/// after the verb. Yields at most one triple.
std::vector<Triple> heuristic_svo(const Sentence& sentence, const PosLexicons& pos,
                                  const Lexicon& deletion);

Lexicon default_deletion_lexicon(bool case_fold = true);
PosLexicons default_pos_lexicons(bool case_fold = true);

struct AugmentedTriple {
  std::string x;
  std::string y_plus;
  std::string z_plus;
  std::size_t source_index = 0;
  std::string backbone;             // rendered triple
  std::vector<std::string> deleted;  // tokens removed for z_plus
};

struct SkippedSentence {
  std::size_t index = 0;
  std::string reason;
  std::string text;
};

struct TripleBuild {
  std::vector<AugmentedTriple> triples;
  std::vector<SkippedSentence> skipped;
};

struct AugmentLexicons {
  Lexicon deletion;
  PosLexicons pos;
};

/// One augmented triple per sentence. Sidecar triples win over the heuristic;
/// each sentence draws from its own stream keyed by (seed, source index).
TripleBuild build_triples(const Corpus& corpus,
                          const std::map<std::size_t, TripleAnnotation>* sidecar,
                          const AugmentLexicons& lexicons, std::uint64_t seed);

}  // namespace sifter
