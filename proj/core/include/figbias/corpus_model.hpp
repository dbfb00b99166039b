#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace figbias {

using Json = nlohmann::ordered_json;

enum class Label { metaphoric, literal };
enum class Partition { train, dev, test };

std::string_view to_string(Label label);
std::string_view to_string(Partition partition);
Label parse_label(std::string_view text);          // throws DataError
Partition parse_partition(std::string_view text);  // throws DataError

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > start ? end - start : 0; }
  bool contains(std::size_t token) const { return token >= start && token < end; }
  auto operator<=>(const Span&) const = default;
};

/// One labeled example: a tokenized context with one or more target spans
/// (the potentially metaphorical expression). More than one span models a
/// discontiguous idiom such as "rock the political boat".
struct Instance {
  std::string id;
  std::string dataset;
  std::vector<std::string> tokens;
  std::vector<Span> spans;
  Label label = Label::literal;
  std::optional<std::vector<std::string>> lemmas;
  std::optional<std::vector<std::string>> pos;
  std::optional<Partition> split_hint;
  // Set by normalize_discontiguous when several spans were merged.
  std::optional<std::vector<Span>> original_spans;
  // Unknown JSONL fields, kept verbatim for round-trips.
  Json extra = Json::object();

  /// [min start, max end) over all spans. Requires at least one span.
  Span merged_span() const;
  /// Tokens covered by the spans, in order (gaps between spans excluded).
  std::vector<std::string> span_tokens() const;
  bool in_span(std::size_t token) const;
};

struct Dataset {
  std::string name;
  std::vector<Instance> instances;
  std::string provenance;

  std::size_t count(Label label) const;
  /// Percentage (0-100) of metaphoric instances; 0 for an empty dataset.
  double metaphoric_percent() const;
};

struct Violation {
  std::string id;
  std::string message;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Lists every invariant violation. Never throws and never modifies the input.
ValidationReport validate(const Dataset& dataset);
ValidationReport validate(const Instance& instance);

/// What a lexical split keys on.
struct SplitKey {
  enum class Kind { surface, lemma, head };

  Kind kind = Kind::surface;
  // Position within the span tokens; only meaningful for Kind::head.
  std::size_t head_index = 0;

  static SplitKey surface() { return {Kind::surface, 0}; }
  static SplitKey lemma() { return {Kind::lemma, 0}; }
  static SplitKey head(std::size_t k) { return {Kind::head, k}; }

  /// Accepts "surface", "lemma" and "head:<k>". Throws ConfigError.
  static SplitKey parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const SplitKey&) const = default;
};

/// Case-folded key of the instance's span under `key`. Returns nullopt when
/// the key kind needs lemmas the instance lacks (or the head index is out of
/// range); callers decide how to fall back.
std::optional<std::string> split_key_of(const Instance& instance, const SplitKey& key);

struct ResolvedKey {
  std::string value;
  bool fell_back = false;
};

/// split_key_of with the documented fallback to the surface key.
ResolvedKey resolve_split_key(const Instance& instance, const SplitKey& key);

// Canonical JSONL.
Json to_json(const Instance& instance);
Instance instance_from_json(const Json& object);  // throws DataError

Dataset read_jsonl(std::istream& in, std::string name);
Dataset read_jsonl(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, const Dataset& dataset);
void write_jsonl(const std::filesystem::path& path, const Dataset& dataset);

Json spans_to_json(const std::vector<Span>& spans);
std::vector<Span> spans_from_json(const Json& value);

}  // namespace figbias
