#include "sifter/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "sifter/error.hpp"

namespace sifter {

std::string fold_case(std::string_view text) {
  std::string out(text);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

Lexicon::Lexicon(std::string name, const std::vector<std::string>& tokens, bool case_fold)
    : name_(std::move(name)), case_fold_(case_fold) {
  for (const auto& t : tokens) insert(t);
}

void Lexicon::insert(std::string_view token) {
  tokens_.insert(case_fold_ ? fold_case(token) : std::string(token));
}

bool Lexicon::contains(std::string_view token) const {
  if (tokens_.empty()) return false;
  if (case_fold_) return tokens_.count(fold_case(token)) > 0;
  return tokens_.count(std::string(token)) > 0;
}

std::vector<std::string> Lexicon::sorted_tokens() const {
  std::vector<std::string> out(tokens_.begin(), tokens_.end());
  std::sort(out.begin(), out.end());
  return out;
}

Lexicon Lexicon::parse(std::string name, std::string_view text, bool case_fold) {
  Lexicon lex(std::move(name), {}, case_fold);
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    lex.insert(std::string_view(line).substr(first, last - first + 1));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path, bool case_fold) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(path.stem().string(), buf.str(), case_fold);
}

}  // namespace sifter
