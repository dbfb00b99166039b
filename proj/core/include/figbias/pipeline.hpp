#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "figbias/ablation.hpp"
#include "figbias/baselines.hpp"
#include "figbias/ingestion.hpp"
#include "figbias/metrics.hpp"
#include "figbias/splitting.hpp"

namespace figbias {

struct DatasetSource {
  std::string name;  // empty: the adapter's dataset tag
  std::filesystem::path path;
  std::string adapter = "canonical";  // builtin name or adapter JSON path
  std::optional<double> binarize_threshold;
};

struct AuditConfig {
  std::vector<DatasetSource> datasets;
  std::vector<SplitScheme> schemes = {SplitScheme::random_kfold};
  SplitKey key = SplitKey::surface();
  std::size_t k = 5;
  SplitRatios ratios;
  std::optional<std::uint64_t> seed;
  std::vector<AblationMode> modes = {AblationMode::default_input, AblationMode::only_pme,
                                     AblationMode::masked};
  // Kept as text so an unknown name fails in the audit stage.
  std::vector<std::string> classifiers = {"majority", "memorizer", "nb"};
  std::filesystem::path out_dir = "figbias-out";
  std::size_t single_fold_threshold = 10000;
  std::optional<DedupScope> dedup = DedupScope::exact_instance;  // nullopt: keep duplicates
  double nb_alpha = 1.0;
  bool nb_alpha_grid = false;
  bool nb_bigrams = false;
  bool export_splits = false;
};

/// JSON config. Relative dataset paths and out_dir resolve against `base_dir`.
/// Unknown keys are rejected. Throws ConfigError.
AuditConfig config_from_json(const Json& object, const std::filesystem::path& base_dir = {});
AuditConfig load_config(const std::filesystem::path& path);
Json to_json(const AuditConfig& config);

/// A pipeline failure tagged with its stage ("config", "ingest", "dedup",
/// "split", "ablate", "audit", "report", "export").
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string dataset, std::string message, int exit_code);

  const std::string& stage() const { return stage_; }
  const std::string& dataset() const { return dataset_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  std::string dataset_;
  int exit_code_;
};

Json error_record(const StageError& error);

struct RunResult {
  EvalReport report;
  std::vector<std::string> warnings;
};

/// ingest -> dedup -> split -> ablate -> audit -> report for every dataset.
/// Datasets run concurrently; each dataset's stages run in order. Artifacts go
/// to `out_dir/<dataset>/` and the merged report to `out_dir/report.{json,md,csv}`.
/// On failure `out_dir/error.json` holds the error record and StageError is thrown.
RunResult run(const AuditConfig& config);

/// Writes `dir/fold_<f>/<mode>/{train,dev,test}.jsonl` (AblatedExample rows)
/// and `dir/manifest.json`.
void export_splits(const Dataset& dataset, const SplitPlan& plan,
                   std::span<const AblationMode> modes, const std::filesystem::path& dir);

}  // namespace figbias
