#include "sifter/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sifter/error.hpp"

namespace sifter {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> table = {
      {"seed", "0"},
      {"precision", "f64"},
      {"case_fold", "true"},

      {"data.corpus", ""},
      {"data.sidecar", ""},
      {"data.triples", ""},
      {"data.dev_pairs", ""},
      {"data.train", ""},
      {"data.dev", ""},
      {"data.test", ""},

      {"augment.deletion_lexicon", ""},
      {"augment.pronoun_lexicon", ""},
      {"augment.verb_lexicon", ""},
      {"augment.determiner_lexicon", ""},
      {"augment.capital_rule", "initial"},
      {"augment.filter", "true"},

      {"encoder.embed_dim", "768"},
      {"encoder.hidden_dim", "768"},
      {"encoder.pooling", "mean"},

      {"contrastive.temperature", "0.05"},
      {"contrastive.lambda_xy", "1"},
      {"contrastive.lambda_xz", "1"},
      {"contrastive.lambda_yz", "1"},
      {"contrastive.dropout", "0.15"},
      {"contrastive.optimizer", "adamw"},
      {"contrastive.learning_rate", "1e-5"},
      {"contrastive.weight_decay", "0.01"},
      {"contrastive.batch_size", "64"},
      {"contrastive.validation_interval", "125"},
      {"contrastive.epochs", "1"},
      {"contrastive.max_steps", "0"},

      {"classify.embed_dim", "768"},
      {"classify.hidden_dim", "384"},
      {"classify.num_classes", "2"},
      {"classify.variant", "standard"},
      {"classify.lexicon", ""},
      {"classify.dropout", "0.2"},
      {"classify.optimizer", "adam"},
      {"classify.learning_rate", "1e-5"},
      {"classify.weight_decay", "0"},
      {"classify.l2", "1e-7"},
      {"classify.batch_size", "32"},
      {"classify.validation_interval", "50"},
      {"classify.epochs", "1"},
      {"classify.max_steps", "0"},

      {"optim.beta1", "0.9"},
      {"optim.beta2", "0.999"},
      {"optim.epsilon", "1e-8"},
  };
  return table;
}

Config::Config() : values_(defaults()) {}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::merge_text(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    try {
      set(key, trim(std::string_view(body).substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path.string());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("override '" + std::string(assignment) + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
  return it->second;
}

double Config::real(const std::string& key) const {
  const std::string& text = str(key);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno != 0 || !std::isfinite(v)) {
    throw ValidationError("config key '" + key + "' expects a real number, got '" + text + "'");
  }
  return v;
}

std::int64_t Config::integer(const std::string& key) const {
  const std::string& text = str(key);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno != 0) {
    throw ValidationError("config key '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

std::size_t Config::count(const std::string& key) const {
  const auto v = integer(key);
  if (v < 0) throw ValidationError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::u64(const std::string& key) const {
  const std::string& text = str(key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || *end != '\0' || errno != 0) {
    throw ValidationError("config key '" + key + "' expects an unsigned integer, got '" +
                          text + "'");
  }
  return v;
}

bool Config::flag(const std::string& key) const {
  const std::string& text = str(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("config key '" + key + "' expects true or false, got '" + text + "'");
}

std::string Config::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

Config resolve_config(const std::string& explicit_path,
                      const std::vector<std::string>& overrides) {
  Config config;
  if (!explicit_path.empty()) {
    config.merge_file(explicit_path);
  } else if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
    config.merge_file(env);
  }
  for (const auto& o : overrides) config.apply_override(o);
  return config;
}

}  // namespace sifter
