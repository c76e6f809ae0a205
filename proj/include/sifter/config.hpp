#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sifter {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "SIFTER_CONFIG";

/// Flat `key = value` configuration with a fixed key set. Every key has a
/// default; files and `--set` overrides may only assign known keys.
/// Precedence is override > file > default.
class Config {
 public:
  Config();

  static const std::map<std::string, std::string>& defaults();

  /// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
  void merge_text(std::string_view text, const std::string& origin = "config");
  void merge_file(const std::filesystem::path& path);
  /// `key=value`, as given on the command line.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;

  /// Every key with its resolved value, sorted, one `key = value` per line.
  std::string resolved_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Defaults, then the file named by `explicit_path` (or by the environment
/// variable when no path is given), then each override in order.
Config resolve_config(const std::string& explicit_path,
                      const std::vector<std::string>& overrides);

}  // namespace sifter
