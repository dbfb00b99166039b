#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figbias/ablation.hpp"
#include "figbias/corpus_model.hpp"

namespace figbias {

/// Binary confusion counts with the metaphoric class as positive.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(Label gold, Label predicted);
  static ConfusionCounts from_pairs(std::span<const Label> gold, std::span<const Label> predicted);

  bool operator==(const ConfusionCounts&) const = default;
};

/// All values are percentages in [0, 100] at full precision; round only for display.
struct MetricBundle {
  double accuracy = 0;
  double precision_met = 0;
  double recall_met = 0;
  double f1_met = 0;
  double precision_lit = 0;
  double recall_lit = 0;
  double f1_lit = 0;
  double macro_f1 = 0;
};

/// Zero denominators give 0 for precision, recall and F1. Throws
/// std::domain_error when counts.total() == 0.
MetricBundle metrics(const ConfusionCounts& counts);

/// 100 * (baseline - default) / default at full precision; nullopt when the
/// default score is not positive.
std::optional<double> relative_gap(double default_score, double baseline_score);

/// Round half away from zero to one decimal.
double round1(double value);
/// One-decimal text, e.g. "82.9".
std::string format1(double value);
/// Bracketed signed gap, e.g. "(-25.2%)", or "(n/a)".
std::string format_gap(std::optional<double> gap);

// One (fold, mode, classifier) evaluation.
struct EvalCell {
  std::size_t fold = 0;
  AblationMode mode = AblationMode::default_input;
  std::string classifier;
  ConfusionCounts counts;
  MetricBundle metrics;
  // Accuracy of the constant train-majority predictor on this fold's test set.
  double majority_accuracy = 0;
  std::optional<double> nb_alpha;
};

// Fold-averaged row for one (mode, classifier) with gaps against default.
struct EvalSummary {
  AblationMode mode = AblationMode::default_input;
  std::string classifier;
  std::size_t folds = 0;
  MetricBundle metrics;
  double majority_accuracy = 0;
  std::optional<double> gap_macro_f1;
  std::optional<double> gap_accuracy;
};

struct EvalEntry {
  std::string dataset;
  std::string scheme;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::vector<EvalCell> cells;
  std::vector<EvalSummary> averages;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;
  std::vector<EvalEntry> entries;
};

/// Recomputes `entry.averages` from its cells: per (mode, classifier) means
/// over folds, then gaps of the averaged scores against the default mode of
/// the same classifier.
void summarize(EvalEntry& entry);

Json to_json(const ConfusionCounts& counts);
Json to_json(const MetricBundle& bundle);
Json to_json(const EvalReport& report);
EvalReport report_from_json(const Json& object);  // throws DataError
EvalReport read_report(const std::filesystem::path& path);
void write_report(const std::filesystem::path& path, const EvalReport& report);

/// Concatenates entries; reports from other tools with the same schema merge here.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

enum class ReportFormat { markdown, csv, json };
enum class ReportMetric { macro_f1, accuracy };

ReportFormat parse_report_format(std::string_view text);  // throws ConfigError
ReportMetric parse_report_metric(std::string_view text);  // throws ConfigError

/// Table with columns Maj | Default | PME | Masked, one row per
/// (dataset, scheme, classifier); baseline cells carry their bracketed gap.
std::string render(const EvalReport& report, ReportFormat format,
                   ReportMetric metric = ReportMetric::macro_f1);
void emit(const EvalReport& report, ReportFormat format, const std::filesystem::path& path,
          ReportMetric metric = ReportMetric::macro_f1);

}  // namespace figbias
