#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sifter {

/// Token-to-row mapping for embedding tables. Id 0 is reserved for tokens
/// never seen while building; the rest follow first-occurrence order.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  explicit Vocabulary(bool case_fold = true);

  void add(std::string_view token);
  void add_all(std::span<const std::string> tokens);
  std::size_t id(std::string_view token) const;
  std::vector<std::size_t> ids(std::span<const std::string> tokens) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  bool case_fold() const { return case_fold_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path, bool case_fold = true);

 private:
  std::string key(std::string_view token) const;

  bool case_fold_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sifter
