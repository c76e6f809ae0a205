#include "sifter/vocab.hpp"

#include <fstream>

#include "sifter/error.hpp"
#include "sifter/lexicon.hpp"

namespace sifter {

Vocabulary::Vocabulary(bool case_fold) : case_fold_(case_fold) {
  tokens_.emplace_back(kUnknown);
  index_.emplace(std::string(kUnknown), 0);
}

std::string Vocabulary::key(std::string_view token) const {
  return case_fold_ ? fold_case(token) : std::string(token);
}

void Vocabulary::add(std::string_view token) {
  std::string k = key(token);
  if (index_.count(k) > 0) return;
  index_.emplace(k, tokens_.size());
  tokens_.push_back(std::move(k));
}

void Vocabulary::add_all(std::span<const std::string> tokens) {
  for (const auto& t : tokens) add(t);
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(key(token));
  return it == index_.end() ? 0 : it->second;
}

std::vector<std::size_t> Vocabulary::ids(std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (std::size_t i = 1; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, bool case_fold) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  Vocabulary v(case_fold);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) v.add(line);
  }
  return v;
}

}  // namespace sifter
