#include "figbias/corpus_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "figbias/errors.hpp"
#include "figbias/text.hpp"

namespace figbias {

std::string_view to_string(Label label) {
  return label == Label::metaphoric ? "metaphoric" : "literal";
}

std::string_view to_string(Partition partition) {
  switch (partition) {
    case Partition::train:
      return "train";
    case Partition::dev:
      return "dev";
    case Partition::test:
      return "test";
  }
  return "train";
}

Label parse_label(std::string_view text) {
  if (text == "metaphoric") return Label::metaphoric;
  if (text == "literal") return Label::literal;
  throw DataError("unknown label '" + std::string(text) + "'");
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::train;
  if (text == "dev") return Partition::dev;
  if (text == "test") return Partition::test;
  throw DataError("unknown partition '" + std::string(text) + "'");
}

Span Instance::merged_span() const {
  Span merged = spans.front();
  for (const Span& s : spans) {
    merged.start = std::min(merged.start, s.start);
    merged.end = std::max(merged.end, s.end);
  }
  return merged;
}

std::vector<std::string> Instance::span_tokens() const {
  std::vector<std::string> out;
  for (const Span& s : spans) {
    for (std::size_t i = s.start; i < s.end && i < tokens.size(); ++i) out.push_back(tokens[i]);
  }
  return out;
}

bool Instance::in_span(std::size_t token) const {
  return std::any_of(spans.begin(), spans.end(),
                     [token](const Span& s) { return s.contains(token); });
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      instances.begin(), instances.end(), [label](const Instance& i) { return i.label == label; }));
}

double Dataset::metaphoric_percent() const {
  if (instances.empty()) return 0.0;
  return 100.0 * static_cast<double>(count(Label::metaphoric)) /
         static_cast<double>(instances.size());
}

ValidationReport validate(const Instance& instance) {
  ValidationReport report;
  auto add = [&](std::string message) { report.push_back({instance.id, std::move(message)}); };

  if (instance.id.empty()) add("empty id");
  if (instance.tokens.empty()) add("no tokens");
  if (instance.spans.empty()) add("no spans");

  const std::size_t n = instance.tokens.size();
  for (std::size_t i = 0; i < instance.spans.size(); ++i) {
    const Span& s = instance.spans[i];
    if (s.start >= s.end) {
      add("empty span");
    } else if (s.end > n) {
      add("span out of range");
    }
    if (i > 0) {
      const Span& prev = instance.spans[i - 1];
      if (s.start < prev.start) {
        add("spans not sorted");
      } else if (s.start < prev.end) {
        add("overlapping spans");
      }
    }
  }
  if (instance.lemmas && instance.lemmas->size() != n) add("lemma length mismatch");
  if (instance.pos && instance.pos->size() != n) add("pos length mismatch");
  return report;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  std::unordered_set<std::string> seen;
  for (const Instance& instance : dataset.instances) {
    ValidationReport one = validate(instance);
    report.insert(report.end(), one.begin(), one.end());
    if (!instance.id.empty() && !seen.insert(instance.id).second) {
      report.push_back({instance.id, "duplicate id"});
    }
  }
  return report;
}

SplitKey SplitKey::parse(std::string_view text) {
  if (text == "surface") return surface();
  if (text == "lemma") return lemma();
  constexpr std::string_view prefix = "head:";
  if (text.substr(0, prefix.size()) == prefix) {
    std::string_view digits = text.substr(prefix.size());
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return head(k);
    }
  }
  throw ConfigError("unknown split key '" + std::string(text) +
                    "' (expected surface, lemma or head:<k>)");
}

std::string SplitKey::to_string() const {
  switch (kind) {
    case Kind::surface:
      return "surface";
    case Kind::lemma:
      return "lemma";
    case Kind::head:
      return "head:" + std::to_string(head_index);
  }
  return "surface";
}

std::optional<std::string> split_key_of(const Instance& instance, const SplitKey& key) {
  switch (key.kind) {
    case SplitKey::Kind::surface:
      return fold_case(join(instance.span_tokens()));
    case SplitKey::Kind::lemma:
    case SplitKey::Kind::head: {
      if (!instance.lemmas || instance.lemmas->size() != instance.tokens.size()) {
        return std::nullopt;
      }
      std::vector<std::string> lemmas;
      for (const Span& s : instance.spans) {
        for (std::size_t i = s.start; i < s.end; ++i) lemmas.push_back((*instance.lemmas)[i]);
      }
      if (key.kind == SplitKey::Kind::lemma) return fold_case(join(lemmas));
      if (key.head_index >= lemmas.size()) return std::nullopt;
      return fold_case(lemmas[key.head_index]);
    }
  }
  return std::nullopt;
}

ResolvedKey resolve_split_key(const Instance& instance, const SplitKey& key) {
  if (auto value = split_key_of(instance, key)) return {std::move(*value), false};
  return {*split_key_of(instance, SplitKey::surface()), true};
}

Json spans_to_json(const std::vector<Span>& spans) {
  Json out = Json::array();
  for (const Span& s : spans) out.push_back(Json::array({s.start, s.end}));
  return out;
}

std::vector<Span> spans_from_json(const Json& value) {
  if (!value.is_array()) throw DataError("spans must be an array");
  std::vector<Span> spans;
  for (const Json& pair : value) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
        !pair[1].is_number_unsigned()) {
      throw DataError("each span must be a pair of non-negative integers");
    }
    spans.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
  }
  return spans;
}

namespace {

Json optional_strings(const std::optional<std::vector<std::string>>& values) {
  if (!values) return nullptr;
  return Json(*values);
}

std::optional<std::vector<std::string>> read_optional_strings(const Json& object,
                                                              const char* field) {
  auto it = object.find(field);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw DataError(std::string(field) + " must be an array or null");
  std::vector<std::string> out;
  for (const Json& v : *it) {
    if (!v.is_string()) throw DataError(std::string(field) + " must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

const std::set<std::string, std::less<>> kKnownFields = {
    "id", "dataset", "tokens", "spans", "label", "lemmas", "pos", "split_hint", "original_spans"};

}  // namespace

Json to_json(const Instance& instance) {
  Json out;
  out["id"] = instance.id;
  out["dataset"] = instance.dataset;
  out["tokens"] = instance.tokens;
  out["spans"] = spans_to_json(instance.spans);
  out["label"] = to_string(instance.label);
  out["lemmas"] = optional_strings(instance.lemmas);
  out["pos"] = optional_strings(instance.pos);
  if (instance.split_hint) {
    out["split_hint"] = to_string(*instance.split_hint);
  } else {
    out["split_hint"] = nullptr;
  }
  if (instance.original_spans) out["original_spans"] = spans_to_json(*instance.original_spans);
  for (const auto& [k, v] : instance.extra.items()) out[k] = v;
  return out;
}

Instance instance_from_json(const Json& object) {
  if (!object.is_object()) throw DataError("instance must be a JSON object");
  Instance instance;
  auto require = [&](const char* field) -> const Json& {
    auto it = object.find(field);
    if (it == object.end()) throw DataError(std::string("missing field '") + field + "'");
    return *it;
  };
  const Json& id = require("id");
  if (!id.is_string()) throw DataError("id must be a string");
  instance.id = id.get<std::string>();
  if (auto it = object.find("dataset"); it != object.end() && it->is_string()) {
    instance.dataset = it->get<std::string>();
  }
  const Json& tokens = require("tokens");
  if (!tokens.is_array()) throw DataError("tokens must be an array");
  for (const Json& t : tokens) {
    if (!t.is_string()) throw DataError("tokens must contain strings");
    instance.tokens.push_back(t.get<std::string>());
  }
  instance.spans = spans_from_json(require("spans"));
  const Json& label = require("label");
  if (!label.is_string()) throw DataError("label must be a string");
  instance.label = parse_label(label.get<std::string>());
  instance.lemmas = read_optional_strings(object, "lemmas");
  instance.pos = read_optional_strings(object, "pos");
  if (auto it = object.find("split_hint"); it != object.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("split_hint must be a string or null");
    instance.split_hint = parse_partition(it->get<std::string>());
  }
  if (auto it = object.find("original_spans"); it != object.end() && !it->is_null()) {
    instance.original_spans = spans_from_json(*it);
  }
  for (const auto& [k, v] : object.items()) {
    if (!kKnownFields.contains(k)) instance.extra[k] = v;
  }
  return instance;
}

Dataset read_jsonl(std::istream& in, std::string name) {
  Dataset dataset;
  dataset.name = std::move(name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      dataset.instances.push_back(instance_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!dataset.instances.empty() && !dataset.instances.front().dataset.empty()) {
    dataset.name = dataset.instances.front().dataset;
  }
  return dataset;
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_jsonl(in, path.stem().string());
}

void write_jsonl(std::ostream& out, const Dataset& dataset) {
  for (const Instance& instance : dataset.instances) out << to_json(instance).dump() << '\n';
}

void write_jsonl(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_jsonl(out, dataset);
}

}  // namespace figbias
