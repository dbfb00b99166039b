#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "figbias/corpus_model.hpp"

namespace figbias {

enum class SourceFormat { canonical, delimited, jsonl, xml };

/// How the target span is located in a source record.
enum class SpanSource {
  pme_string,    // the expression as text; matched against the sentence tokens
  token_index,   // a single 0-based token index
  char_offsets,  // character offsets [start, end) into the sentence text
  whole_text,    // the record text is the expression itself (adjective-noun pairs)
};

struct ScoreBinarization {
  double scale_min = 0.0;
  double scale_max = 1.0;
  // Scores >= threshold are metaphoric. Defaults to the scale midpoint.
  std::optional<double> threshold;

  double effective_threshold() const {
    return threshold.value_or((scale_min + scale_max) / 2.0);
  }
};

/// Declarative description of a third-party dataset layout.
///
/// Field names refer to header columns (delimited with header), to 0-based
/// column numbers written as strings (delimited without header), to object
/// keys (jsonl) or to attributes/child elements of each record (xml).
struct AdapterSpec {
  std::string name;
  std::string dataset_tag;
  SourceFormat format = SourceFormat::canonical;
  char delimiter = '\t';
  bool header = true;
  std::string xml_record = "instance";

  SpanSource span_source = SpanSource::pme_string;
  std::string id_field;  // empty: ids are generated as <tag>-<index>
  std::string sentence_field = "sentence";
  std::string pme_field = "pme";
  std::string index_field = "index";
  std::string char_start_field = "start";
  std::string char_end_field = "end";
  std::string label_field = "label";
  std::string score_field;  // set for scored datasets
  std::string split_field;  // empty: no original split
  // When set, only records whose filter field is one of filter_values are kept
  // (several adapters over one raw file, e.g. zero/one/few-shot variants).
  std::string filter_field;
  std::vector<std::string> filter_values;

  // Source label text -> binary label. Must cover every observed label.
  std::map<std::string, Label> label_map;
  std::optional<ScoreBinarization> binarize;
  std::map<std::string, Partition> split_map = {
      {"train", Partition::train}, {"dev", Partition::dev},
      {"validation", Partition::dev}, {"valid", Partition::dev}, {"test", Partition::test}};

  // Expected %metaphoric; ingest warns when the result falls outside.
  std::pair<double, double> expected_met_range = {0.0, 100.0};

  // Replace the context of test-split records by the bare expression
  // (training data made only of expression pairs, e.g. TSV adjective-noun).
  bool strip_test_context = false;

  std::string note;
};

AdapterSpec adapter_from_json(const Json& object);  // throws ConfigError
Json to_json(const AdapterSpec& spec);

/// Built-in adapters by name ("canonical", "trofi", "tsv_an", ...).
std::optional<AdapterSpec> builtin_adapter(std::string_view name);
std::vector<std::string> builtin_adapter_names();

/// Builtin name, or a path to an adapter JSON file.
AdapterSpec load_adapter(std::string_view name_or_path);

struct IngestResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

IngestResult ingest(std::istream& in, const AdapterSpec& adapter);
IngestResult ingest(const std::filesystem::path& raw_path, const AdapterSpec& adapter);

/// Locates `expression` in `tokens`: contiguous exact match, then contiguous
/// case-insensitive, then an in-order discontiguous case-insensitive match of
/// minimal extent. Empty result: not found.
std::vector<Span> locate_expression(const std::vector<std::string>& tokens,
                                    const std::vector<std::string>& expression);

enum class DedupScope { exact_instance, context_and_span };

DedupScope parse_dedup_scope(std::string_view text);  // throws ConfigError
std::string_view to_string(DedupScope scope);

struct Removal {
  std::string removed_id;
  std::string kept_id;
};

struct DedupResult {
  Dataset dataset;
  std::vector<Removal> log;
};

/// Keeps the first occurrence of every equivalence class under `scope`.
/// exact_instance compares tokens, spans, label, lemmas and PoS;
/// context_and_span ignores the label.
DedupResult deduplicate(const Dataset& dataset, DedupScope scope);

Json to_json(const Removal& removal);

/// Replaces several spans by their merged range; the originals go to
/// `original_spans`. Single-span instances are returned unchanged.
Instance normalize_discontiguous(const Instance& instance);

/// Groups of ids whose contexts coincide while their spans differ: either the
/// token sequences are identical, or they are identical once the merged span
/// is cut out (a substituted expression). Groups are disjoint, members are in
/// input order, and groups are ordered by their first member.
std::vector<std::vector<std::string>> detect_context_duplication(const Dataset& dataset);

}  // namespace figbias
