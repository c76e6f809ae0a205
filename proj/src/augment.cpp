#include "sifter/augment.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "sifter/error.hpp"

namespace sifter {
namespace {

bool is_punct(char ch) { return std::ispunct(static_cast<unsigned char>(ch)) != 0; }
bool is_upper(char ch) { return std::isupper(static_cast<unsigned char>(ch)) != 0; }
bool is_alpha(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) != 0; }

bool is_opening(std::string_view token) {
  return token == "(" || token == "[" || token == "{";
}

}  // namespace

bool is_word_token(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) != 0; });
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    std::string_view chunk = text.substr(pos, end - pos);
    pos = end;
    if (chunk.empty()) continue;

    std::size_t begin = 0;
    while (begin < chunk.size() && is_punct(chunk[begin])) {
      tokens.emplace_back(1, chunk[begin]);
      ++begin;
    }
    std::string_view core = chunk.substr(begin);
    std::vector<std::string> trailing;
    while (!core.empty() && is_punct(core.back())) {
      const bool abbreviation = core.back() == '.' && core.size() > 1 &&
                                core.substr(0, core.size() - 1).find('.') != std::string_view::npos;
      if (abbreviation) break;
      trailing.emplace_back(1, core.back());
      core.remove_suffix(1);
    }
    if (!core.empty()) tokens.emplace_back(core);
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  }
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool glue = i == 0 || (!is_word_token(tokens[i]) && !is_opening(tokens[i])) ||
                      is_opening(tokens[i - 1]);
    if (!glue) out += ' ';
    out += tokens[i];
  }
  return out;
}

Sentence Sentence::parse(std::string text, std::size_t index) {
  Sentence s;
  s.tokens = tokenize(text);
  s.text = std::move(text);
  s.index = index;
  return s;
}

std::size_t Sentence::word_count() const {
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [](const std::string& t) { return is_word_token(t); }));
}

Corpus Corpus::from_lines(const std::vector<std::string>& lines) {
  Corpus c;
  for (std::size_t i = 0; i < lines.size(); ++i) c.sentences.push_back(Sentence::parse(lines[i], i));
  return c;
}

CapitalRule parse_capital_rule(const std::string& text) {
  if (text == "initial") return CapitalRule::initial;
  if (text == "all_upper") return CapitalRule::all_upper;
  throw ValidationError("unknown capitalization rule '" + text + "' (expected initial|all_upper)");
}

std::string to_string(CapitalRule rule) {
  return rule == CapitalRule::initial ? "initial" : "all_upper";
}

namespace {

bool capitalized(std::string_view word, CapitalRule rule) {
  if (word.empty()) return false;
  if (rule == CapitalRule::initial) return is_upper(word.front());
  bool any_letter = false;
  for (char ch : word) {
    if (is_alpha(ch)) {
      any_letter = true;
      if (!is_upper(ch)) return false;
    }
  }
  return any_letter;
}

const std::string* last_word(const Sentence& s) {
  for (auto it = s.tokens.rbegin(); it != s.tokens.rend(); ++it) {
    if (is_word_token(*it)) return &*it;
  }
  return nullptr;
}

}  // namespace

Corpus filter_corpus(const Corpus& corpus, CapitalRule rule) {
  const std::size_t n = corpus.size();
  std::vector<bool> drop(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Sentence& s = corpus.sentences[i];
    if (s.word_count() < 3) drop[i] = true;
    const std::string* last = last_word(s);
    if (last != nullptr && capitalized(*last, rule)) {
      drop[i] = true;
      if (i + 1 < n) drop[i + 1] = true;
    }
  }
  Corpus out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) out.sentences.push_back(corpus.sentences[i]);
  }
  return out;
}

Triple Triple::from_strings(std::string_view subject, std::string_view relation,
                            std::string_view object) {
  return {tokenize(subject), tokenize(relation), tokenize(object)};
}

std::string Triple::render() const {
  std::vector<std::string> all;
  for (const auto* part : {&subject, &relation, &object}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  return detokenize(all) + ".";
}

void validate_annotation(const Sentence& sentence, const TripleAnnotation& annotation) {
  for (std::size_t k = 0; k < annotation.triples.size(); ++k) {
    const Triple& t = annotation.triples[k];
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) {
      throw ValidationError("triple " + std::to_string(k) + " for sentence " +
                            std::to_string(annotation.index) + " has an empty element");
    }
    std::size_t cursor = 0;
    for (const auto* part : {&t.subject, &t.relation, &t.object}) {
      for (const auto& token : *part) {
        while (cursor < sentence.tokens.size() && sentence.tokens[cursor] != token) ++cursor;
        if (cursor == sentence.tokens.size()) {
          throw ValidationError("triple " + std::to_string(k) + " for sentence " +
                                std::to_string(annotation.index) + ": token '" + token +
                                "' does not occur in order in the sentence");
        }
        ++cursor;
      }
    }
  }
}

std::optional<BackboneResult> add_backbone(const Sentence& sentence,
                                           std::span<const Triple> candidates, Rng& rng) {
  if (candidates.empty()) return std::nullopt;
  BackboneResult out;
  out.chosen = candidates.size() == 1 ? 0 : static_cast<std::size_t>(rng.below(candidates.size()));
  out.text = sentence.text + " " + candidates[out.chosen].render();
  return out;
}

DeletionResult delete_useless(const Sentence& sentence, const Lexicon& deletion) {
  DeletionResult out;
  for (const auto& token : sentence.tokens) {
    if (deletion.contains(token)) {
      out.deleted.push_back(token);
    } else {
      out.tokens.push_back(token);
    }
  }
  out.text = detokenize(out.tokens);
  return out;
}

std::vector<Triple> heuristic_svo(const Sentence& sentence, const PosLexicons& pos,
                                  const Lexicon& deletion) {
  const auto& tokens = sentence.tokens;
  auto word = [&](std::size_t i) { return is_word_token(tokens[i]); };

  std::size_t i = 0;
  for (; i < tokens.size(); ++i) {
    if (!word(i) || pos.determiners.contains(tokens[i]) || deletion.contains(tokens[i])) continue;
    if (pos.pronouns.contains(tokens[i]) || is_upper(tokens[i].front())) break;
  }
  if (i >= tokens.size()) return {};
  const std::size_t subject = i;

  for (i = subject + 1; i < tokens.size(); ++i) {
    if (word(i) && pos.verbs.contains(tokens[i])) break;
  }
  if (i >= tokens.size()) return {};
  const std::size_t relation = i;

  for (i = relation + 1; i < tokens.size(); ++i) {
    if (!word(i) || !is_alpha(tokens[i].front())) continue;
    if (deletion.contains(tokens[i]) || pos.verbs.contains(tokens[i]) ||
        pos.determiners.contains(tokens[i])) {
      continue;
    }
    break;
  }
  if (i >= tokens.size()) return {};
  return {Triple{{tokens[subject]}, {tokens[relation]}, {tokens[i]}}};
}

namespace {

const std::vector<std::string>& deletion_words() {
  static const std::vector<std::string> words = {
      // articles
      "a", "an", "the",
      // coordinating conjunctions ("so" is left out: it is mostly an adverb)
      "and", "but", "or", "nor", "for", "yet",
      // frequent subordinators
      "because", "although", "though", "while", "whereas"};
  return words;
}

const std::vector<std::string>& pronoun_words() {
  static const std::vector<std::string> words = {
      "i",    "you",  "he",     "she",    "it",     "we",     "they",  "me",
      "him",  "her",  "us",     "them",   "myself", "yourself", "himself", "herself",
      "itself", "ourselves", "themselves", "someone", "somebody", "everyone",
      "everybody", "nobody", "one"};
  return words;
}

const std::vector<std::string>& verb_words() {
  static const std::vector<std::string> words = {
      "am",      "is",      "are",     "was",      "were",    "be",      "been",
      "being",   "have",    "has",     "had",      "do",      "does",    "did",
      "like",    "likes",   "liked",   "love",     "loves",   "loved",   "hate",
      "hates",   "hated",   "want",    "wants",    "wanted",  "need",    "needs",
      "needed",  "think",   "thinks",  "thought",  "know",    "knows",   "knew",
      "see",     "sees",    "saw",     "look",     "looks",   "looked",  "make",
      "makes",   "made",    "take",    "takes",    "took",    "get",     "gets",
      "got",     "give",    "gives",   "gave",     "find",    "finds",   "found",
      "eat",     "eats",    "ate",     "buy",      "buys",    "bought",  "read",
      "reads",   "write",   "writes",  "wrote",    "play",    "plays",   "played",
      "visit",   "visits",  "visited", "build",    "builds",  "built",   "use",
      "uses",    "used",    "own",     "owns",     "owned",   "enjoy",   "enjoys",
      "enjoyed", "prefer",  "prefers", "preferred", "watch",  "watches", "watched",
      "bring",   "brings",  "brought", "keep",     "keeps",   "kept",    "hold",
      "holds",   "held",    "meet",    "meets",    "met",     "study",   "studies",
      "studied", "cook",    "cooks",   "cooked",   "drive",   "drives",  "drove",
      "open",    "opens",   "opened",  "help",     "helps",   "helped",  "sell",
      "sells",   "sold",    "teach",   "teaches",  "taught",  "feel",    "feels",
      "felt",    "say",     "says",    "said",     "tell",    "tells",   "told",
      "show",    "shows",   "showed",  "carry",    "carries", "carried", "paint",
      "paints",  "painted", "fix",     "fixes",    "fixed",   "should",  "would",
      "could",   "can",     "will",    "may",      "might",   "must"};
  return words;
}

const std::vector<std::string>& determiner_words() {
  static const std::vector<std::string> words = {
      "this",  "that",    "these",   "those", "my",    "your",    "his",     "her",
      "its",   "our",     "their",   "some",  "any",   "every",   "each",    "no",
      "a",     "an",      "the",     "another", "such", "what",   "which",   "whose",
      "all",   "both",    "either",  "neither", "many", "much",   "few",     "several"};
  return words;
}

}  // namespace

Lexicon default_deletion_lexicon(bool case_fold) {
  return Lexicon("deletion", deletion_words(), case_fold);
}

PosLexicons default_pos_lexicons(bool case_fold) {
  return {Lexicon("pronouns", pronoun_words(), case_fold),
          Lexicon("verbs", verb_words(), case_fold),
          Lexicon("determiners", determiner_words(), case_fold)};
}

TripleBuild build_triples(const Corpus& corpus,
                          const std::map<std::size_t, TripleAnnotation>* sidecar,
                          const AugmentLexicons& lexicons, std::uint64_t seed) {
  TripleBuild out;
  const Rng root(seed);
  for (const Sentence& s : corpus.sentences) {
    std::vector<Triple> candidates;
    if (sidecar != nullptr) {
      if (auto it = sidecar->find(s.index); it != sidecar->end()) {
        validate_annotation(s, it->second);
        candidates = it->second.triples;
      }
    }
    if (candidates.empty()) candidates = heuristic_svo(s, lexicons.pos, lexicons.deletion);

    Rng rng = root.fork(s.index);
    auto backbone = add_backbone(s, candidates, rng);
    if (!backbone) {
      out.skipped.push_back({s.index, "no backbone triple", s.text});
      continue;
    }
    DeletionResult deletion = delete_useless(s, lexicons.deletion);
    if (deletion.empty()) {
      out.skipped.push_back({s.index, "deletion removed every token", s.text});
      continue;
    }
    AugmentedTriple t;
    t.x = s.text;
    t.y_plus = backbone->text;
    t.z_plus = deletion.text;
    t.source_index = s.index;
    t.backbone = candidates[backbone->chosen].render();
    t.deleted = std::move(deletion.deleted);
    out.triples.push_back(std::move(t));
  }
  if (out.triples.empty()) {
    throw ValidationError("augmentation produced no triples (" +
                          std::to_string(out.skipped.size()) + " sentences skipped)");
  }
  return out;
}

}  // namespace sifter
