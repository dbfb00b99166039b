#include "figbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "figbias/errors.hpp"

namespace figbias {

void ConfusionCounts::add(Label gold, Label predicted) {
  if (gold == Label::metaphoric) {
    predicted == Label::metaphoric ? ++tp : ++fn;
  } else {
    predicted == Label::metaphoric ? ++fp : ++tn;
  }
}

ConfusionCounts ConfusionCounts::from_pairs(std::span<const Label> gold,
                                            std::span<const Label> predicted) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("gold and predicted label sequences differ in length");
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < gold.size(); ++i) counts.add(gold[i], predicted[i]);
  return counts;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricBundle metrics(const ConfusionCounts& c) {
  const std::size_t total = c.total();
  if (total == 0) throw std::domain_error("metrics over zero evaluated examples");
  const double p_met = ratio(c.tp, c.tp + c.fp);
  const double r_met = ratio(c.tp, c.tp + c.fn);
  const double p_lit = ratio(c.tn, c.tn + c.fn);
  const double r_lit = ratio(c.tn, c.tn + c.fp);

  MetricBundle m;
  m.accuracy = 100.0 * ratio(c.tp + c.tn, total);
  m.precision_met = 100.0 * p_met;
  m.recall_met = 100.0 * r_met;
  m.f1_met = 100.0 * f1_of(p_met, r_met);
  m.precision_lit = 100.0 * p_lit;
  m.recall_lit = 100.0 * r_lit;
  m.f1_lit = 100.0 * f1_of(p_lit, r_lit);
  m.macro_f1 = (m.f1_met + m.f1_lit) / 2.0;
  return m;
}

std::optional<double> relative_gap(double default_score, double baseline_score) {
  if (!(default_score > 0.0)) return std::nullopt;
  return 100.0 * (baseline_score - default_score) / default_score;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

std::string format1(double value) {
  char buf[32];
  double r = round1(value);
  if (r == 0.0) r = 0.0;  // no "-0.0"
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

std::string format_gap(std::optional<double> gap) {
  if (!gap) return "(n/a)";
  std::string text = format1(*gap);
  if (text.front() != '-') text.insert(0, "+");
  return "(" + text + "%)";
}

void summarize(EvalEntry& entry) {
  struct Acc {
    std::size_t folds = 0;
    MetricBundle sum;
    double majority = 0;
  };
  std::vector<std::string> classifiers;
  std::map<std::pair<std::string, AblationMode>, Acc> acc;
  for (const EvalCell& cell : entry.cells) {
    if (std::find(classifiers.begin(), classifiers.end(), cell.classifier) == classifiers.end()) {
      classifiers.push_back(cell.classifier);
    }
    Acc& a = acc[{cell.classifier, cell.mode}];
    ++a.folds;
    a.sum.accuracy += cell.metrics.accuracy;
    a.sum.precision_met += cell.metrics.precision_met;
    a.sum.recall_met += cell.metrics.recall_met;
    a.sum.f1_met += cell.metrics.f1_met;
    a.sum.precision_lit += cell.metrics.precision_lit;
    a.sum.recall_lit += cell.metrics.recall_lit;
    a.sum.f1_lit += cell.metrics.f1_lit;
    a.sum.macro_f1 += cell.metrics.macro_f1;
    a.majority += cell.majority_accuracy;
  }

  entry.averages.clear();
  for (const std::string& classifier : classifiers) {
    for (AblationMode mode :
         {AblationMode::default_input, AblationMode::only_pme, AblationMode::masked}) {
      auto it = acc.find({classifier, mode});
      if (it == acc.end()) continue;
      const Acc& a = it->second;
      const double n = static_cast<double>(a.folds);
      EvalSummary s;
      s.mode = mode;
      s.classifier = classifier;
      s.folds = a.folds;
      s.metrics = {a.sum.accuracy / n,     a.sum.precision_met / n, a.sum.recall_met / n,
                   a.sum.f1_met / n,       a.sum.precision_lit / n, a.sum.recall_lit / n,
                   a.sum.f1_lit / n,       a.sum.macro_f1 / n};
      s.majority_accuracy = a.majority / n;
      entry.averages.push_back(s);
    }
  }
  for (EvalSummary& s : entry.averages) {
    auto base = std::find_if(entry.averages.begin(), entry.averages.end(), [&](const EvalSummary& d) {
      return d.classifier == s.classifier && d.mode == AblationMode::default_input;
    });
    if (base == entry.averages.end()) continue;
    s.gap_macro_f1 = relative_gap(base->metrics.macro_f1, s.metrics.macro_f1);
    s.gap_accuracy = relative_gap(base->metrics.accuracy, s.metrics.accuracy);
  }
}

Json to_json(const ConfusionCounts& c) {
  return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

Json to_json(const MetricBundle& m) {
  return Json{{"accuracy", m.accuracy},           {"precision_met", m.precision_met},
              {"recall_met", m.recall_met},       {"f1_met", m.f1_met},
              {"precision_lit", m.precision_lit}, {"recall_lit", m.recall_lit},
              {"f1_lit", m.f1_lit},               {"macro_f1", m.macro_f1}};
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional_number(const Json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

MetricBundle bundle_from_json(const Json& m) {
  return {m.at("accuracy").get<double>(),      m.at("precision_met").get<double>(),
          m.at("recall_met").get<double>(),    m.at("f1_met").get<double>(),
          m.at("precision_lit").get<double>(), m.at("recall_lit").get<double>(),
          m.at("f1_lit").get<double>(),        m.at("macro_f1").get<double>()};
}

AblationMode mode_from_json(const Json& value) {
  try {
    return parse_ablation_mode(value.get<std::string>());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

}  // namespace

Json to_json(const EvalReport& report) {
  Json out;
  out["schema_version"] = EvalReport::kSchemaVersion;
  Json entries = Json::array();
  for (const EvalEntry& e : report.entries) {
    Json entry;
    entry["dataset"] = e.dataset;
    entry["scheme"] = e.scheme;
    entry["k"] = e.k;
    entry["seed"] = e.seed;
    Json cells = Json::array();
    for (const EvalCell& c : e.cells) {
      Json cell;
      cell["fold"] = c.fold;
      cell["mode"] = to_string(c.mode);
      cell["classifier"] = c.classifier;
      cell["counts"] = to_json(c.counts);
      cell["metrics"] = to_json(c.metrics);
      cell["majority_accuracy"] = c.majority_accuracy;
      cell["nb_alpha"] = optional_number(c.nb_alpha);
      cells.push_back(std::move(cell));
    }
    entry["cells"] = std::move(cells);
    Json averages = Json::array();
    for (const EvalSummary& s : e.averages) {
      Json row;
      row["mode"] = to_string(s.mode);
      row["classifier"] = s.classifier;
      row["folds"] = s.folds;
      row["metrics"] = to_json(s.metrics);
      row["majority_accuracy"] = s.majority_accuracy;
      row["gap_macro_f1"] = optional_number(s.gap_macro_f1);
      row["gap_accuracy"] = optional_number(s.gap_accuracy);
      averages.push_back(std::move(row));
    }
    entry["averages"] = std::move(averages);
    entries.push_back(std::move(entry));
  }
  out["entries"] = std::move(entries);
  return out;
}

EvalReport report_from_json(const Json& object) {
  try {
    const int version = object.at("schema_version").get<int>();
    if (version != EvalReport::kSchemaVersion) {
      throw DataError("unsupported report schema_version " + std::to_string(version));
    }
    EvalReport report;
    for (const Json& e : object.at("entries")) {
      EvalEntry entry;
      entry.dataset = e.at("dataset").get<std::string>();
      entry.scheme = e.value("scheme", std::string("original"));
      entry.k = e.value("k", std::size_t{1});
      entry.seed = e.value("seed", std::uint64_t{0});
      for (const Json& c : e.at("cells")) {
        EvalCell cell;
        cell.fold = c.value("fold", std::size_t{0});
        cell.mode = mode_from_json(c.at("mode"));
        cell.classifier = c.at("classifier").get<std::string>();
        const Json& counts = c.at("counts");
        cell.counts = {counts.at("tp").get<std::size_t>(), counts.at("fp").get<std::size_t>(),
                       counts.at("fn").get<std::size_t>(), counts.at("tn").get<std::size_t>()};
        if (auto m = c.find("metrics"); m != c.end() && !m->is_null()) {
          cell.metrics = bundle_from_json(*m);
        } else if (cell.counts.total() > 0) {
          cell.metrics = metrics(cell.counts);
        }
        cell.majority_accuracy = c.value("majority_accuracy", 0.0);
        cell.nb_alpha = read_optional_number(c, "nb_alpha");
        entry.cells.push_back(std::move(cell));
      }
      if (auto avg = e.find("averages"); avg != e.end() && !avg->empty()) {
        for (const Json& a : *avg) {
          EvalSummary s;
          s.mode = mode_from_json(a.at("mode"));
          s.classifier = a.at("classifier").get<std::string>();
          s.folds = a.value("folds", std::size_t{1});
          s.metrics = bundle_from_json(a.at("metrics"));
          s.majority_accuracy = a.value("majority_accuracy", 0.0);
          s.gap_macro_f1 = read_optional_number(a, "gap_macro_f1");
          s.gap_accuracy = read_optional_number(a, "gap_accuracy");
          entry.averages.push_back(std::move(s));
        }
      } else {
        summarize(entry);
      }
      report.entries.push_back(std::move(entry));
    }
    return report;
  } catch (const Json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return report_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  EvalReport merged;
  for (const EvalReport& r : reports) {
    merged.entries.insert(merged.entries.end(), r.entries.begin(), r.entries.end());
  }
  return merged;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::markdown;
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(text) + "'");
}

ReportMetric parse_report_metric(std::string_view text) {
  if (text == "macro_f1") return ReportMetric::macro_f1;
  if (text == "accuracy") return ReportMetric::accuracy;
  throw ConfigError("unknown report metric '" + std::string(text) + "'");
}

namespace {

struct TableRow {
  std::string dataset;
  std::string scheme;
  std::string classifier;
  std::optional<double> maj;
  std::optional<double> def;
  std::optional<double> pme;
  std::optional<double> pme_gap;
  std::optional<double> masked;
  std::optional<double> masked_gap;
  bool pme_present = false;
  bool masked_present = false;
};

std::vector<TableRow> table_rows(const EvalReport& report, ReportMetric metric) {
  std::vector<TableRow> rows;
  for (const EvalEntry& entry : report.entries) {
    std::vector<std::string> classifiers;
    for (const EvalSummary& s : entry.averages) {
      if (std::find(classifiers.begin(), classifiers.end(), s.classifier) == classifiers.end()) {
        classifiers.push_back(s.classifier);
      }
    }
    for (const std::string& classifier : classifiers) {
      TableRow row;
      row.dataset = entry.dataset;
      row.scheme = entry.scheme;
      row.classifier = classifier;
      for (const EvalSummary& s : entry.averages) {
        if (s.classifier != classifier) continue;
        const double score =
            metric == ReportMetric::macro_f1 ? s.metrics.macro_f1 : s.metrics.accuracy;
        const auto gap = metric == ReportMetric::macro_f1 ? s.gap_macro_f1 : s.gap_accuracy;
        if (!row.maj) row.maj = s.majority_accuracy;
        switch (s.mode) {
          case AblationMode::default_input:
            row.def = score;
            break;
          case AblationMode::only_pme:
            row.pme = score;
            row.pme_gap = gap;
            row.pme_present = true;
            break;
          case AblationMode::masked:
            row.masked = score;
            row.masked_gap = gap;
            row.masked_present = true;
            break;
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string cell_text(const std::optional<double>& v) { return v ? format1(*v) : "-"; }

std::string baseline_text(const std::optional<double>& v, const std::optional<double>& gap,
                          bool has_default) {
  if (!v) return "-";
  if (!has_default) return format1(*v);
  return format1(*v) + " " + format_gap(gap);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string gap_number(const std::optional<double>& gap, bool present) {
  if (!present) return "";
  return gap ? format1(*gap) : "n/a";
}

}  // namespace

std::string render(const EvalReport& report, ReportFormat format, ReportMetric metric) {
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";

  const std::vector<TableRow> rows = table_rows(report, metric);
  std::ostringstream out;
  if (format == ReportFormat::markdown) {
    out << "Scores: " << (metric == ReportMetric::macro_f1 ? "macro-F1" : "accuracy")
        << " (fold-averaged). Maj: accuracy of the train-majority predictor. "
        << "Brackets: relative difference to Default.\n\n";
    out << "| Dataset | Scheme | Classifier | Maj | Default | PME | Masked |\n";
    out << "|---|---|---|---:|---:|---:|---:|\n";
    for (const TableRow& r : rows) {
      out << "| " << r.dataset << " | " << r.scheme << " | " << r.classifier << " | "
          << cell_text(r.maj) << " | " << cell_text(r.def) << " | "
          << baseline_text(r.pme, r.pme_gap, r.def.has_value()) << " | "
          << baseline_text(r.masked, r.masked_gap, r.def.has_value()) << " |\n";
    }
  } else {
    out << "dataset,scheme,classifier,maj,default,only_pme,only_pme_gap,masked,masked_gap\n";
    for (const TableRow& r : rows) {
      out << csv_field(r.dataset) << ',' << csv_field(r.scheme) << ',' << csv_field(r.classifier)
          << ',' << (r.maj ? format1(*r.maj) : "") << ',' << (r.def ? format1(*r.def) : "")
          << ',' << (r.pme ? format1(*r.pme) : "") << ','
          << gap_number(r.pme_gap, r.pme_present && r.def) << ','
          << (r.masked ? format1(*r.masked) : "") << ','
          << gap_number(r.masked_gap, r.masked_present && r.def) << '\n';
    }
  }
  return out.str();
}

void emit(const EvalReport& report, ReportFormat format, const std::filesystem::path& path,
          ReportMetric metric) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << render(report, format, metric);
}

}  // namespace figbias
