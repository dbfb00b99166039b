#include "figbias/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "figbias/errors.hpp"
#include "figbias/text.hpp"

namespace figbias {

namespace {

using Record = std::map<std::string, std::string, std::less<>>;

std::string_view to_string(SourceFormat format) {
  switch (format) {
    case SourceFormat::canonical:
      return "canonical";
    case SourceFormat::delimited:
      return "delimited";
    case SourceFormat::jsonl:
      return "jsonl";
    case SourceFormat::xml:
      return "xml";
  }
  return "canonical";
}

std::string_view to_string(SpanSource source) {
  switch (source) {
    case SpanSource::pme_string:
      return "pme_string";
    case SpanSource::token_index:
      return "token_index";
    case SpanSource::char_offsets:
      return "char_offsets";
    case SpanSource::whole_text:
      return "whole_text";
  }
  return "pme_string";
}

SourceFormat parse_format(std::string_view text) {
  for (auto f : {SourceFormat::canonical, SourceFormat::delimited, SourceFormat::jsonl,
                 SourceFormat::xml}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("unknown adapter format '" + std::string(text) + "'");
}

SpanSource parse_span_source(std::string_view text) {
  for (auto s : {SpanSource::pme_string, SpanSource::token_index, SpanSource::char_offsets,
                 SpanSource::whole_text}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown span source '" + std::string(text) + "'");
}

// RFC 4180 style field splitting: quotes group delimiters, "" is a literal quote.
std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::vector<Record> read_delimited(std::istream& in, const AdapterSpec& spec) {
  std::vector<Record> records;
  std::vector<std::string> columns;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_record(line, spec.delimiter);
    if (first && spec.header) {
      for (auto& f : fields) columns.push_back(trim(f));
      first = false;
      continue;
    }
    first = false;
    Record record;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      std::string name = spec.header ? (i < columns.size() ? columns[i] : std::string())
                                     : std::to_string(i);
      if (!name.empty()) record[name] = fields[i];
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<Record> read_json_lines(std::istream& in) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Json object;
    try {
      object = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!object.is_object()) {
      throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");
    }
    Record record;
    for (const auto& [k, v] : object.items()) {
      if (v.is_string()) {
        record[k] = v.get<std::string>();
      } else if (v.is_number() || v.is_boolean()) {
        record[k] = v.dump();
      } else if (v.is_array()) {
        // Token lists are accepted as space-joined text.
        std::vector<std::string> parts;
        for (const Json& item : v) parts.push_back(item.is_string() ? item.get<std::string>()
                                                                    : item.dump());
        record[k] = join(parts);
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

void collect_xml_records(const boost::property_tree::ptree& tree, const std::string& tag,
                         std::vector<Record>& out) {
  for (const auto& [name, child] : tree) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (name == tag) {
      Record record;
      if (auto attrs = child.get_child_optional("<xmlattr>")) {
        for (const auto& [k, v] : *attrs) record[k] = v.data();
      }
      for (const auto& [k, v] : child) {
        if (k != "<xmlattr>" && k != "<xmlcomment>") record[k] = trim(v.data());
      }
      out.push_back(std::move(record));
    } else {
      collect_xml_records(child, tag, out);
    }
  }
}

std::vector<Record> read_xml(std::istream& in, const AdapterSpec& spec) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw DataError(std::string("xml: ") + e.what());
  }
  std::vector<Record> records;
  collect_xml_records(tree, spec.xml_record, records);
  return records;
}

std::optional<std::string> field(const Record& record, const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto it = record.find(name);
  if (it == record.end()) return std::nullopt;
  return it->second;
}

std::string require_field(const Record& record, const std::string& name, std::size_t index) {
  auto value = field(record, name);
  if (!value) {
    throw DataError("record " + std::to_string(index) + ": missing field '" + name + "'");
  }
  return *value;
}

double parse_double(const std::string& text, std::size_t index, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("record " + std::to_string(index) + ": " + what + " '" + text +
                  "' is not a number");
}

std::size_t parse_size(const std::string& text, std::size_t index, const std::string& what) {
  std::string t = trim(text);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw DataError("record " + std::to_string(index) + ": " + what + " '" + text +
                    "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> tokens = split_whitespace(text);
  for (auto& t : tokens) t = nfc(t);
  return tokens;
}

// Maps character offsets [begin, end) onto the whitespace tokens they touch.
std::optional<Span> tokens_for_chars(std::string_view text, std::size_t begin, std::size_t end) {
  std::optional<Span> span;
  std::size_t token = 0;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t tb = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::size_t te = i;
    if (tb < end && te > begin) {
      if (!span) span = Span{token, token + 1};
      span->end = token + 1;
    }
    ++token;
  }
  return span;
}

std::vector<Span> to_ranges(std::vector<std::size_t> positions) {
  std::vector<Span> spans;
  for (std::size_t p : positions) {
    if (!spans.empty() && spans.back().end == p) {
      spans.back().end = p + 1;
    } else {
      spans.push_back({p, p + 1});
    }
  }
  return spans;
}

Instance build_instance(const Record& record, std::size_t index, const AdapterSpec& spec) {
  Instance instance;
  instance.dataset = spec.dataset_tag.empty() ? spec.name : spec.dataset_tag;
  if (!spec.id_field.empty()) {
    instance.id = trim(require_field(record, spec.id_field, index));
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    instance.id = instance.dataset + "-" + buf;
  }

  if (spec.binarize) {
    double score = parse_double(require_field(record, spec.score_field, index), index, "score");
    instance.label =
        score >= spec.binarize->effective_threshold() ? Label::metaphoric : Label::literal;
  } else {
    std::string raw = trim(require_field(record, spec.label_field, index));
    auto it = spec.label_map.find(raw);
    if (it == spec.label_map.end()) it = spec.label_map.find(fold_case(raw));
    if (it == spec.label_map.end()) {
      throw DataError("record " + std::to_string(index) + ": unmapped label '" + raw + "'");
    }
    instance.label = it->second;
  }

  switch (spec.span_source) {
    case SpanSource::whole_text: {
      auto text = field(record, spec.pme_field);
      if (!text || trim(*text).empty()) text = require_field(record, spec.sentence_field, index);
      instance.tokens = normalized_tokens(*text);
      if (instance.tokens.empty()) {
        throw DataError("record " + std::to_string(index) + ": empty expression");
      }
      instance.spans = {{0, instance.tokens.size()}};
      break;
    }
    case SpanSource::pme_string: {
      instance.tokens = normalized_tokens(require_field(record, spec.sentence_field, index));
      std::string pme = require_field(record, spec.pme_field, index);
      instance.spans = locate_expression(instance.tokens, normalized_tokens(pme));
      if (instance.spans.empty()) {
        throw DataError("record " + std::to_string(index) + ": cannot resolve span '" + pme +
                        "' in sentence");
      }
      break;
    }
    case SpanSource::token_index: {
      instance.tokens = normalized_tokens(require_field(record, spec.sentence_field, index));
      std::size_t i =
          parse_size(require_field(record, spec.index_field, index), index, "token index");
      if (i >= instance.tokens.size()) {
        throw DataError("record " + std::to_string(index) + ": cannot resolve span: token index " +
                        std::to_string(i) + " out of range");
      }
      instance.spans = {{i, i + 1}};
      break;
    }
    case SpanSource::char_offsets: {
      std::string sentence = require_field(record, spec.sentence_field, index);
      instance.tokens = normalized_tokens(sentence);
      std::size_t b =
          parse_size(require_field(record, spec.char_start_field, index), index, "char start");
      std::size_t e =
          parse_size(require_field(record, spec.char_end_field, index), index, "char end");
      auto span = b < e ? tokens_for_chars(sentence, b, e) : std::nullopt;
      if (!span) {
        throw DataError("record " + std::to_string(index) + ": cannot resolve span: offsets [" +
                        std::to_string(b) + ", " + std::to_string(e) + ")");
      }
      instance.spans = {*span};
      break;
    }
  }

  if (auto split = field(record, spec.split_field)) {
    std::string key = fold_case(trim(*split));
    auto it = spec.split_map.find(key);
    if (it == spec.split_map.end()) {
      throw DataError("record " + std::to_string(index) + ": unknown split '" + *split + "'");
    }
    instance.split_hint = it->second;
  }

  if (spec.strip_test_context && instance.split_hint == Partition::test) {
    std::vector<std::string> expression = instance.span_tokens();
    instance.tokens = std::move(expression);
    instance.spans = {{0, instance.tokens.size()}};
  }
  return instance;
}

const std::map<std::string, Label> kGenericLabels = {
    {"1", Label::metaphoric},          {"0", Label::literal},
    {"metaphoric", Label::metaphoric}, {"literal", Label::literal},
    {"metaphor", Label::metaphoric},   {"met", Label::metaphoric},
    {"lit", Label::literal},           {"figurative", Label::metaphoric},
    {"idiomatic", Label::metaphoric},  {"true", Label::metaphoric},
    {"false", Label::literal},
};

AdapterSpec delimited(std::string name, double met_percent, SpanSource source) {
  AdapterSpec spec;
  spec.name = name;
  spec.dataset_tag = std::move(name);
  spec.format = SourceFormat::delimited;
  spec.delimiter = '\t';
  spec.span_source = source;
  spec.label_map = kGenericLabels;
  spec.expected_met_range = {std::max(0.0, met_percent - 10.0),
                             std::min(100.0, met_percent + 10.0)};
  return spec;
}

std::vector<AdapterSpec> make_builtins() {
  std::vector<AdapterSpec> all;

  AdapterSpec canonical;
  canonical.name = "canonical";
  canonical.format = SourceFormat::canonical;
  canonical.note = "canonical JSONL, one instance per line";
  all.push_back(canonical);

  // Expected %metaphoric values are the published dataset statistics; ingest
  // only warns when they are missed.
  auto trofi = delimited("trofi", 57, SpanSource::pme_string);
  trofi.label_map["N"] = Label::metaphoric;
  trofi.label_map["L"] = Label::literal;
  trofi.split_field = "split";
  all.push_back(trofi);

  auto tsv_an = delimited("tsv_an", 50, SpanSource::whole_text);
  tsv_an.split_field = "split";
  tsv_an.strip_test_context = true;
  tsv_an.note = "adjective-noun pairs; test sentences are reduced to the pair";
  all.push_back(tsv_an);

  auto tsv_v = delimited("tsv_v", 57, SpanSource::pme_string);
  tsv_v.split_field = "split";
  all.push_back(tsv_v);

  auto gut = delimited("gut", 54, SpanSource::whole_text);
  all.push_back(gut);

  all.push_back(delimited("moh", 25, SpanSource::pme_string));

  auto llc = delimited("llc", 41, SpanSource::pme_string);
  llc.score_field = "score";
  llc.binarize = ScoreBinarization{0.0, 3.0, std::nullopt};
  llc.note = "metaphoricity score on a 0-3 scale, binarized at the midpoint by default";
  all.push_back(llc);

  all.push_back(delimited("chak", 67, SpanSource::pme_string));

  auto dunn = delimited("dunn", 67, SpanSource::pme_string);
  dunn.score_field = "score";
  dunn.binarize = ScoreBinarization{0.0, 1.0, std::nullopt};
  dunn.note = "metaphoricity score normalized to [0, 1], binarized at the midpoint by default";
  all.push_back(dunn);

  all.push_back(delimited("neu", 56, SpanSource::whole_text));
  all.push_back(delimited("idix", 48, SpanSource::pme_string));
  auto pvc = delimited("pvc", 65, SpanSource::pme_string);
  pvc.note = "lexical splits key on the verb: use --key head:0";
  all.push_back(pvc);
  all.push_back(delimited("vnc", 79, SpanSource::pme_string));

  auto se_all = delimited("se2013_all", 60, SpanSource::pme_string);
  se_all.split_field = "split";
  all.push_back(se_all);
  auto se_lex = delimited("se2013_lex", 51, SpanSource::pme_string);
  se_lex.split_field = "split";
  all.push_back(se_lex);

  for (auto [variant, value] : {std::pair{"mad_fewshot", "few_shot"},
                                std::pair{"mad_oneshot", "one_shot"},
                                std::pair{"mad_zeroshot", "zero_shot"}}) {
    auto mad = delimited(variant, 48, SpanSource::pme_string);
    mad.split_field = "split";
    mad.filter_field = "setting";
    mad.filter_values = {value};
    all.push_back(mad);
  }

  auto pie = delimited("pie", 47, SpanSource::pme_string);
  pie.split_field = "split";
  all.push_back(pie);
  auto magpie = delimited("magpie", 75, SpanSource::pme_string);
  magpie.format = SourceFormat::jsonl;
  magpie.split_field = "split";
  all.push_back(magpie);

  all.push_back(delimited("card_n", 50, SpanSource::pme_string));
  all.push_back(delimited("card_v", 50, SpanSource::pme_string));
  all.push_back(delimited("jank", 33, SpanSource::pme_string));
  return all;
}

const std::vector<AdapterSpec>& builtins() {
  static const std::vector<AdapterSpec> all = make_builtins();
  return all;
}

}  // namespace

std::optional<AdapterSpec> builtin_adapter(std::string_view name) {
  for (const AdapterSpec& spec : builtins()) {
    if (spec.name == name) return spec;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_adapter_names() {
  std::vector<std::string> names;
  for (const AdapterSpec& spec : builtins()) names.push_back(spec.name);
  return names;
}

Json to_json(const AdapterSpec& spec) {
  Json out;
  out["name"] = spec.name;
  out["dataset_tag"] = spec.dataset_tag;
  out["format"] = to_string(spec.format);
  out["delimiter"] = std::string(1, spec.delimiter);
  out["header"] = spec.header;
  out["xml_record"] = spec.xml_record;
  out["span_source"] = to_string(spec.span_source);
  out["id_field"] = spec.id_field;
  out["sentence_field"] = spec.sentence_field;
  out["pme_field"] = spec.pme_field;
  out["index_field"] = spec.index_field;
  out["char_start_field"] = spec.char_start_field;
  out["char_end_field"] = spec.char_end_field;
  out["label_field"] = spec.label_field;
  out["score_field"] = spec.score_field;
  out["split_field"] = spec.split_field;
  out["filter_field"] = spec.filter_field;
  out["filter_values"] = spec.filter_values;
  Json labels = Json::object();
  for (const auto& [k, v] : spec.label_map) labels[k] = figbias::to_string(v);
  out["label_map"] = labels;
  if (spec.binarize) {
    Json b;
    b["scale_min"] = spec.binarize->scale_min;
    b["scale_max"] = spec.binarize->scale_max;
    b["threshold"] = spec.binarize->effective_threshold();
    out["binarize"] = b;
  } else {
    out["binarize"] = nullptr;
  }
  Json splits = Json::object();
  for (const auto& [k, v] : spec.split_map) splits[k] = figbias::to_string(v);
  out["split_map"] = splits;
  out["expected_met_range"] = Json::array({spec.expected_met_range.first,
                                           spec.expected_met_range.second});
  out["strip_test_context"] = spec.strip_test_context;
  out["note"] = spec.note;
  return out;
}

AdapterSpec adapter_from_json(const Json& object) {
  if (!object.is_object()) throw ConfigError("adapter spec must be a JSON object");
  AdapterSpec spec;
  if (auto base = object.find("base"); base != object.end()) {
    auto found = builtin_adapter(base->get<std::string>());
    if (!found) throw ConfigError("unknown base adapter '" + base->get<std::string>() + "'");
    spec = *found;
  }
  try {
    auto str = [&](const char* key, std::string& target) {
      if (auto it = object.find(key); it != object.end()) target = it->get<std::string>();
    };
    str("name", spec.name);
    str("dataset_tag", spec.dataset_tag);
    if (auto it = object.find("format"); it != object.end()) {
      spec.format = parse_format(it->get<std::string>());
    }
    if (auto it = object.find("delimiter"); it != object.end()) {
      std::string d = it->get<std::string>();
      if (d == "\\t" || d == "tab") d = "\t";
      if (d.size() != 1) throw ConfigError("delimiter must be a single character");
      spec.delimiter = d[0];
    }
    if (auto it = object.find("header"); it != object.end()) spec.header = it->get<bool>();
    str("xml_record", spec.xml_record);
    if (auto it = object.find("span_source"); it != object.end()) {
      spec.span_source = parse_span_source(it->get<std::string>());
    }
    str("id_field", spec.id_field);
    str("sentence_field", spec.sentence_field);
    str("pme_field", spec.pme_field);
    str("index_field", spec.index_field);
    str("char_start_field", spec.char_start_field);
    str("char_end_field", spec.char_end_field);
    str("label_field", spec.label_field);
    str("score_field", spec.score_field);
    str("split_field", spec.split_field);
    str("filter_field", spec.filter_field);
    if (auto it = object.find("filter_values"); it != object.end()) {
      spec.filter_values = it->get<std::vector<std::string>>();
    }
    if (auto it = object.find("label_map"); it != object.end()) {
      spec.label_map.clear();
      for (const auto& [k, v] : it->items()) {
        try {
          spec.label_map[k] = parse_label(v.get<std::string>());
        } catch (const DataError& e) {
          throw ConfigError(e.what());
        }
      }
    }
    if (auto it = object.find("binarize"); it != object.end() && !it->is_null()) {
      ScoreBinarization b;
      b.scale_min = it->value("scale_min", 0.0);
      b.scale_max = it->value("scale_max", 1.0);
      if (auto t = it->find("threshold"); t != it->end() && !t->is_null()) {
        b.threshold = t->get<double>();
      }
      spec.binarize = b;
    }
    if (auto it = object.find("split_map"); it != object.end()) {
      spec.split_map.clear();
      for (const auto& [k, v] : it->items()) {
        try {
          spec.split_map[fold_case(k)] = parse_partition(v.get<std::string>());
        } catch (const DataError& e) {
          throw ConfigError(e.what());
        }
      }
    }
    if (auto it = object.find("expected_met_range"); it != object.end()) {
      auto range = it->get<std::vector<double>>();
      if (range.size() != 2) throw ConfigError("expected_met_range must have two numbers");
      spec.expected_met_range = {range[0], range[1]};
    }
    if (auto it = object.find("strip_test_context"); it != object.end()) {
      spec.strip_test_context = it->get<bool>();
    }
    str("note", spec.note);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("adapter spec: ") + e.what());
  }
  if (spec.name.empty()) throw ConfigError("adapter spec needs a name");
  if (spec.binarize && spec.score_field.empty()) {
    throw ConfigError("adapter '" + spec.name + "' binarizes scores but has no score_field");
  }
  if (!spec.binarize && spec.format != SourceFormat::canonical && spec.label_map.empty()) {
    throw ConfigError("adapter '" + spec.name + "' has an empty label_map");
  }
  return spec;
}

AdapterSpec load_adapter(std::string_view name_or_path) {
  if (auto spec = builtin_adapter(name_or_path)) return *spec;
  std::filesystem::path path(name_or_path);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      return adapter_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
      throw ConfigError("adapter file " + path.string() + ": " + e.what());
    }
  }
  throw ConfigError("unknown adapter '" + std::string(name_or_path) +
                    "' (not a builtin name or an adapter JSON file)");
}

std::vector<Span> locate_expression(const std::vector<std::string>& tokens,
                                    const std::vector<std::string>& expression) {
  const std::size_t n = tokens.size();
  const std::size_t m = expression.size();
  if (m == 0 || m > n) return {};

  auto contiguous = [&](auto equal) -> std::optional<Span> {
    for (std::size_t i = 0; i + m <= n; ++i) {
      bool ok = true;
      for (std::size_t j = 0; j < m && ok; ++j) ok = equal(tokens[i + j], expression[j]);
      if (ok) return Span{i, i + m};
    }
    return std::nullopt;
  };
  auto exact = [](const std::string& a, const std::string& b) { return a == b; };
  auto folded = [](const std::string& a, const std::string& b) {
    return fold_case(a) == fold_case(b);
  };
  if (auto s = contiguous(exact)) return {*s};
  if (auto s = contiguous(folded)) return {*s};

  // Discontiguous: anchor on each occurrence of the first token, match the rest
  // greedily left to right, keep the smallest extent.
  std::optional<std::vector<std::size_t>> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (!folded(tokens[i], expression[0])) continue;
    std::vector<std::size_t> positions{i};
    std::size_t at = i + 1;
    for (std::size_t j = 1; j < m; ++j) {
      while (at < n && !folded(tokens[at], expression[j])) ++at;
      if (at >= n) break;
      positions.push_back(at++);
    }
    if (positions.size() != m) break;
    if (!best || positions.back() - positions.front() < best->back() - best->front()) {
      best = std::move(positions);
    }
  }
  if (!best) return {};
  return to_ranges(std::move(*best));
}

IngestResult ingest(std::istream& in, const AdapterSpec& adapter) {
  IngestResult result;
  Dataset& dataset = result.dataset;
  dataset.name = adapter.dataset_tag.empty() ? adapter.name : adapter.dataset_tag;

  if (adapter.format == SourceFormat::canonical) {
    dataset = read_jsonl(in, dataset.name);
    if (!adapter.dataset_tag.empty()) dataset.name = adapter.dataset_tag;
  } else {
    std::vector<Record> records;
    switch (adapter.format) {
      case SourceFormat::delimited:
        records = read_delimited(in, adapter);
        break;
      case SourceFormat::jsonl:
        records = read_json_lines(in);
        break;
      case SourceFormat::xml:
        records = read_xml(in, adapter);
        break;
      case SourceFormat::canonical:
        break;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!adapter.filter_field.empty()) {
        auto value = field(records[i], adapter.filter_field);
        if (!value || std::find(adapter.filter_values.begin(), adapter.filter_values.end(),
                                trim(*value)) == adapter.filter_values.end()) {
          continue;
        }
      }
      dataset.instances.push_back(build_instance(records[i], i, adapter));
    }
  }

  std::ostringstream provenance;
  provenance << "adapter=" << adapter.name;
  if (adapter.binarize) {
    provenance << " binarize_threshold=" << adapter.binarize->effective_threshold()
               << " scale=[" << adapter.binarize->scale_min << ","
               << adapter.binarize->scale_max << "]";
  }
  if (adapter.strip_test_context) provenance << " strip_test_context=true";
  dataset.provenance = provenance.str();

  ValidationReport violations = validate(dataset);
  if (!violations.empty()) {
    std::string message = "invalid dataset after ingest:";
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i) {
      message += " [" + violations[i].id + ": " + violations[i].message + "]";
    }
    if (violations.size() > 5) message += " ...";
    throw DataError(message);
  }

  double met = dataset.metaphoric_percent();
  if (!dataset.instances.empty() &&
      (met < adapter.expected_met_range.first || met > adapter.expected_met_range.second)) {
    std::ostringstream w;
    w << "metaphoric share " << met << "% outside the expected range ["
      << adapter.expected_met_range.first << ", " << adapter.expected_met_range.second
      << "] for adapter '" << adapter.name << "'";
    result.warnings.push_back(w.str());
  }
  return result;
}

IngestResult ingest(const std::filesystem::path& raw_path, const AdapterSpec& adapter) {
  std::ifstream in(raw_path);
  if (!in) throw DataError("cannot open " + raw_path.string());
  IngestResult result = ingest(in, adapter);
  if (adapter.format == SourceFormat::canonical && adapter.dataset_tag.empty() &&
      result.dataset.instances.empty()) {
    result.dataset.name = raw_path.stem().string();
  }
  return result;
}

DedupScope parse_dedup_scope(std::string_view text) {
  if (text == "exact_instance") return DedupScope::exact_instance;
  if (text == "context_and_span") return DedupScope::context_and_span;
  throw ConfigError("unknown dedup scope '" + std::string(text) + "'");
}

std::string_view to_string(DedupScope scope) {
  return scope == DedupScope::exact_instance ? "exact_instance" : "context_and_span";
}

DedupResult deduplicate(const Dataset& dataset, DedupScope scope) {
  DedupResult result;
  result.dataset.name = dataset.name;
  result.dataset.provenance = dataset.provenance;
  std::unordered_map<std::string, std::string> first_of;
  for (const Instance& instance : dataset.instances) {
    Json key = Json::array();
    key.push_back(instance.tokens);
    key.push_back(spans_to_json(instance.spans));
    if (scope == DedupScope::exact_instance) {
      key.push_back(to_string(instance.label));
      key.push_back(instance.lemmas ? Json(*instance.lemmas) : Json(nullptr));
      key.push_back(instance.pos ? Json(*instance.pos) : Json(nullptr));
    }
    auto [it, inserted] = first_of.try_emplace(key.dump(), instance.id);
    if (inserted) {
      result.dataset.instances.push_back(instance);
    } else {
      result.log.push_back({instance.id, it->second});
    }
  }
  return result;
}

Json to_json(const Removal& removal) {
  Json out;
  out["removed"] = removal.removed_id;
  out["kept"] = removal.kept_id;
  return out;
}

Instance normalize_discontiguous(const Instance& instance) {
  if (instance.spans.size() <= 1) return instance;
  Instance out = instance;
  out.original_spans = instance.spans;
  out.spans = {instance.merged_span()};
  return out;
}

std::vector<std::vector<std::string>> detect_context_duplication(const Dataset& dataset) {
  const std::size_t n = dataset.instances.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  constexpr char kSep = '\x1f';
  std::unordered_map<std::string, std::vector<std::size_t>> by_tokens;
  std::unordered_map<std::string, std::vector<std::size_t>> by_gapped;
  std::vector<std::string> signature(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Instance& instance = dataset.instances[i];
    std::string full;
    for (const auto& t : instance.tokens) (full += t) += kSep;
    Span merged = instance.spans.empty() ? Span{0, 0} : instance.merged_span();
    std::string gapped;
    for (std::size_t t = 0; t < instance.tokens.size(); ++t) {
      if (t == merged.start && merged.size() > 0) gapped += "\x1e";
      if (!merged.contains(t)) (gapped += instance.tokens[t]) += kSep;
    }
    for (const Span& s : instance.spans) {
      signature[i] += std::to_string(s.start) + ":" + std::to_string(s.end) + kSep;
    }
    for (const auto& t : instance.span_tokens()) (signature[i] += t) += kSep;
    by_tokens[full].push_back(i);
    by_gapped[gapped].push_back(i);
  }

  for (const auto* buckets : {&by_tokens, &by_gapped}) {
    for (const auto& [_, members] : *buckets) {
      // Two members are related when their span signatures differ; inside one
      // bucket that connects everything as soon as two signatures exist.
      bool mixed = std::any_of(members.begin(), members.end(), [&](std::size_t m) {
        return signature[m] != signature[members.front()];
      });
      if (!mixed) continue;
      for (std::size_t m : members) unite(members.front(), m);
    }
  }

  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(dataset.instances[i].id);
  std::vector<std::vector<std::string>> out;
  for (auto& [root, ids] : groups) {
    if (ids.size() >= 2) out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace figbias
