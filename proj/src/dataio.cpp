#include "sifter/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sifter/error.hpp"

namespace sifter {
namespace {

using Json = nlohmann::ordered_json;

struct JsonLine {
  std::size_t number;
  Json value;
};

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<JsonLine> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json value = Json::parse(line, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw ValidationError(where(path, number) + ": not a JSON object");
    }
    rows.push_back({number, std::move(value)});
  }
  return rows;
}

const std::string& string_field(const Json& obj, const char* key,
                                const std::filesystem::path& path, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError(where(path, line) + ": missing string field '" + key + "'");
  }
  return it->get_ref<const std::string&>();
}

std::string dump_lines(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

Corpus read_corpus(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::vector<std::string> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    raw.push_back(line);
  }
  bool json_lines = false;
  for (const auto& l : raw) {
    const auto first = l.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    json_lines = l[first] == '{';
    break;
  }
  Corpus corpus;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].find_first_not_of(" \t") == std::string::npos) continue;
    std::string sentence = raw[i];
    if (json_lines) {
      Json value = Json::parse(raw[i], nullptr, false);
      if (value.is_discarded() || !value.is_object()) {
        throw ValidationError(where(path, i + 1) + ": not a JSON object");
      }
      sentence = string_field(value, "text", path, i + 1);
    }
    corpus.sentences.push_back(Sentence::parse(sentence, corpus.sentences.size()));
  }
  if (corpus.sentences.empty()) throw ValidationError("corpus " + path.string() + " is empty");
  return corpus;
}

std::map<std::size_t, TripleAnnotation> read_sidecar(const std::filesystem::path& path) {
  std::map<std::size_t, TripleAnnotation> out;
  for (const auto& [line, obj] : read_jsonl(path)) {
    auto idx = obj.find("index");
    if (idx == obj.end() || !idx->is_number_unsigned()) {
      throw ValidationError(where(path, line) + ": 'index' must be a non-negative integer");
    }
    TripleAnnotation ann;
    ann.index = idx->get<std::size_t>();
    auto triples = obj.find("triples");
    if (triples == obj.end() || !triples->is_array()) {
      throw ValidationError(where(path, line) + ": 'triples' must be an array");
    }
    for (const auto& t : *triples) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
          !t[2].is_string()) {
        throw ValidationError(where(path, line) +
                              ": each triple must be [subject, relation, object] strings");
      }
      ann.triples.push_back(Triple::from_strings(t[0].get<std::string>(),
                                                 t[1].get<std::string>(),
                                                 t[2].get<std::string>()));
    }
    if (out.count(ann.index) > 0) {
      throw ValidationError(where(path, line) + ": duplicate index " +
                            std::to_string(ann.index));
    }
    out.emplace(ann.index, std::move(ann));
  }
  return out;
}

std::string triples_jsonl(std::span<const AugmentedTriple> triples) {
  std::vector<Json> rows;
  for (const auto& t : triples) {
    Json row;
    row["x"] = t.x;
    row["y_plus"] = t.y_plus;
    row["z_plus"] = t.z_plus;
    row["source_index"] = t.source_index;
    row["backbone"] = t.backbone;
    row["deleted"] = t.deleted;
    rows.push_back(std::move(row));
  }
  return dump_lines(rows);
}

std::string skipped_jsonl(std::span<const SkippedSentence> skipped) {
  std::vector<Json> rows;
  for (const auto& s : skipped) {
    Json row;
    row["index"] = s.index;
    row["reason"] = s.reason;
    row["text"] = s.text;
    rows.push_back(std::move(row));
  }
  return dump_lines(rows);
}

std::vector<AugmentedTriple> read_triples(const std::filesystem::path& path) {
  std::vector<AugmentedTriple> out;
  for (const auto& [line, obj] : read_jsonl(path)) {
    AugmentedTriple t;
    t.x = string_field(obj, "x", path, line);
    t.y_plus = string_field(obj, "y_plus", path, line);
    t.z_plus = string_field(obj, "z_plus", path, line);
    if (auto it = obj.find("source_index"); it != obj.end() && it->is_number_unsigned()) {
      t.source_index = it->get<std::size_t>();
    }
    if (auto it = obj.find("backbone"); it != obj.end() && it->is_string()) {
      t.backbone = it->get<std::string>();
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ValidationError("triple file " + path.string() + " is empty");
  return out;
}

std::vector<StsPair> read_sts_pairs(const std::filesystem::path& path) {
  std::vector<StsPair> out;
  for (const auto& [line, obj] : read_jsonl(path)) {
    StsPair p;
    p.s1 = string_field(obj, "s1", path, line);
    p.s2 = string_field(obj, "s2", path, line);
    auto score = obj.find("score");
    if (score == obj.end() || !score->is_number()) {
      throw ValidationError(where(path, line) + ": missing numeric field 'score'");
    }
    p.score = score->get<double>();
    out.push_back(std::move(p));
  }
  if (out.empty()) throw ValidationError("STS file " + path.string() + " is empty");
  return out;
}

std::string sts_pairs_jsonl(std::span<const StsPair> pairs) {
  std::vector<Json> rows;
  for (const auto& p : pairs) {
    Json row;
    row["s1"] = p.s1;
    row["s2"] = p.s2;
    row["score"] = p.score;
    rows.push_back(std::move(row));
  }
  return dump_lines(rows);
}

std::vector<LabeledText> read_labeled(const std::filesystem::path& path, std::size_t num_classes) {
  std::vector<LabeledText> out;
  for (const auto& [line, obj] : read_jsonl(path)) {
    LabeledText row;
    row.text = string_field(obj, "text", path, line);
    auto label = obj.find("label");
    if (label == obj.end() || !label->is_number_integer()) {
      throw ValidationError(where(path, line) + ": missing integer field 'label'");
    }
    const auto value = label->get<std::int64_t>();
    if (value < 0 || static_cast<std::uint64_t>(value) >= num_classes) {
      throw ValidationError(where(path, line) + ": label " + std::to_string(value) +
                            " outside 0.." + std::to_string(num_classes - 1));
    }
    row.label = static_cast<std::size_t>(value);
    out.push_back(std::move(row));
  }
  if (out.empty()) throw ValidationError("labeled file " + path.string() + " is empty");
  return out;
}

std::string labeled_jsonl(std::span<const LabeledText> rows) {
  std::vector<Json> out;
  for (const auto& r : rows) {
    Json row;
    row["text"] = r.text;
    row["label"] = r.label;
    out.push_back(std::move(row));
  }
  return dump_lines(out);
}

std::string classifier_metrics_csv(std::span<const ClassifierHistoryRow> rows) {
  std::string out = "step,train_loss,dev_accuracy\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + format_real(r.train_loss) + "," +
           format_real(r.dev_accuracy) + "\n";
  }
  return out;
}

std::string contrastive_metrics_csv(std::span<const ContrastiveHistoryRow> rows) {
  std::string out = "step,loss,dev_spearman\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + format_real(r.loss) + "," +
           format_real(r.dev_spearman) + "\n";
  }
  return out;
}

}  // namespace sifter
