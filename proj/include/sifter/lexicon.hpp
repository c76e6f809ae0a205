#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sifter {

std::string fold_case(std::string_view text);

/// Named set of surface tokens with exact-match lookup.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::string name, const std::vector<std::string>& tokens, bool case_fold = true);

  /// One token per line; `#` starts a comment, blank lines are ignored.
  static Lexicon load(const std::filesystem::path& path, bool case_fold = true);
  static Lexicon parse(std::string name, std::string_view text, bool case_fold = true);

  const std::string& name() const { return name_; }
  bool case_fold() const { return case_fold_; }
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  void insert(std::string_view token);
  std::vector<std::string> sorted_tokens() const;

 private:
  std::string name_;
  bool case_fold_ = true;
  std::unordered_set<std::string> tokens_;
};

}  // namespace sifter
