#include "figbias/pipeline.hpp"

#include <fstream>
#include <future>
#include <set>

#include "figbias/errors.hpp"

namespace figbias {

namespace fs = std::filesystem;

StageError::StageError(std::string stage, std::string dataset, std::string message, int exit_code)
    : std::runtime_error(std::move(message)),
      stage_(std::move(stage)),
      dataset_(std::move(dataset)),
      exit_code_(exit_code) {}

Json error_record(const StageError& error) {
  Json out;
  out["status"] = "error";
  out["stage"] = error.stage();
  out["dataset"] = error.dataset().empty() ? Json(nullptr) : Json(error.dataset());
  out["message"] = error.what();
  out["exit_code"] = error.exit_code();
  return out;
}

namespace {

const std::set<std::string> kConfigKeys = {
    "datasets", "schemes", "key", "k", "ratios", "seed", "modes", "classifiers", "out_dir",
    "single_fold_threshold", "dedup", "nb_alpha", "nb_alpha_grid", "nb_bigrams", "export"};
const std::set<std::string> kDatasetKeys = {"name", "path", "adapter", "binarize_threshold"};

template <typename T>
T get_as(const Json& object, const char* key) {
  try {
    return object.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config: bad or missing '") + key + "'");
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

AuditConfig config_from_json(const Json& object, const fs::path& base_dir) {
  if (!object.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!kConfigKeys.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  AuditConfig config;
  if (!object.contains("datasets") || !object["datasets"].is_array()) {
    throw ConfigError("config: 'datasets' must be an array");
  }
  for (const Json& d : object["datasets"]) {
    if (d.is_string()) {
      config.datasets.push_back({"", resolve(base_dir, d.get<std::string>()), "canonical", {}});
      continue;
    }
    if (!d.is_object()) throw ConfigError("config: dataset entries must be objects or paths");
    for (const auto& [key, value] : d.items()) {
      if (!kDatasetKeys.contains(key)) throw ConfigError("config: unknown dataset key '" + key + "'");
    }
    DatasetSource source;
    source.path = resolve(base_dir, get_as<std::string>(d, "path"));
    if (d.contains("name")) source.name = get_as<std::string>(d, "name");
    if (d.contains("adapter")) {
      source.adapter = get_as<std::string>(d, "adapter");
      if (!builtin_adapter(source.adapter)) source.adapter = resolve(base_dir, source.adapter).string();
    }
    if (d.contains("binarize_threshold")) {
      source.binarize_threshold = get_as<double>(d, "binarize_threshold");
    }
    config.datasets.push_back(std::move(source));
  }
  if (object.contains("schemes")) {
    config.schemes.clear();
    for (const auto& s : get_as<std::vector<std::string>>(object, "schemes")) {
      config.schemes.push_back(parse_split_scheme(s));
    }
  }
  if (object.contains("key")) config.key = SplitKey::parse(get_as<std::string>(object, "key"));
  if (object.contains("k")) config.k = get_as<std::size_t>(object, "k");
  if (object.contains("ratios")) {
    const Json& r = object["ratios"];
    config.ratios = {get_as<double>(r, "train"), get_as<double>(r, "dev"), get_as<double>(r, "test")};
  }
  if (object.contains("seed")) config.seed = get_as<std::uint64_t>(object, "seed");
  if (object.contains("modes")) {
    config.modes.clear();
    for (const auto& m : get_as<std::vector<std::string>>(object, "modes")) {
      config.modes.push_back(parse_ablation_mode(m));
    }
  }
  if (object.contains("classifiers")) {
    config.classifiers = get_as<std::vector<std::string>>(object, "classifiers");
  }
  if (object.contains("out_dir")) {
    config.out_dir = resolve(base_dir, get_as<std::string>(object, "out_dir"));
  }
  if (object.contains("single_fold_threshold")) {
    config.single_fold_threshold = get_as<std::size_t>(object, "single_fold_threshold");
  }
  if (object.contains("dedup")) {
    const auto scope = get_as<std::string>(object, "dedup");
    config.dedup = scope == "none" ? std::nullopt : std::optional(parse_dedup_scope(scope));
  }
  if (object.contains("nb_alpha")) config.nb_alpha = get_as<double>(object, "nb_alpha");
  if (object.contains("nb_alpha_grid")) config.nb_alpha_grid = get_as<bool>(object, "nb_alpha_grid");
  if (object.contains("nb_bigrams")) config.nb_bigrams = get_as<bool>(object, "nb_bigrams");
  if (object.contains("export")) config.export_splits = get_as<bool>(object, "export");
  return config;
}

AuditConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json object;
  try {
    object = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(object, path.parent_path());
}

Json to_json(const AuditConfig& config) {
  Json out;
  Json datasets = Json::array();
  for (const DatasetSource& d : config.datasets) {
    Json entry;
    if (!d.name.empty()) entry["name"] = d.name;
    entry["path"] = d.path.string();
    entry["adapter"] = d.adapter;
    if (d.binarize_threshold) entry["binarize_threshold"] = *d.binarize_threshold;
    datasets.push_back(std::move(entry));
  }
  out["datasets"] = std::move(datasets);
  Json schemes = Json::array();
  for (SplitScheme s : config.schemes) schemes.push_back(to_string(s));
  out["schemes"] = std::move(schemes);
  out["key"] = config.key.to_string();
  out["k"] = config.k;
  out["ratios"] = {{"train", config.ratios.train},
                   {"dev", config.ratios.dev},
                   {"test", config.ratios.test}};
  out["seed"] = config.seed ? Json(*config.seed) : Json(nullptr);
  Json modes = Json::array();
  for (AblationMode m : config.modes) modes.push_back(to_string(m));
  out["modes"] = std::move(modes);
  out["classifiers"] = config.classifiers;
  out["out_dir"] = config.out_dir.string();
  out["single_fold_threshold"] = config.single_fold_threshold;
  out["dedup"] = config.dedup ? std::string(to_string(*config.dedup)) : std::string("none");
  out["nb_alpha"] = config.nb_alpha;
  out["nb_alpha_grid"] = config.nb_alpha_grid;
  out["nb_bigrams"] = config.nb_bigrams;
  out["export"] = config.export_splits;
  return out;
}

namespace {

// Runs `body`, rethrowing library errors as StageError for `stage`.
template <typename F>
auto staged(const std::string& stage, const std::string& dataset, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, dataset, e.what(), 2);
  } catch (const std::exception& e) {
    throw StageError(stage, dataset, e.what(), 1);
  }
}

void write_lines(const fs::path& path, const std::vector<Json>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Json& row : rows) out << row.dump() << '\n';
}

struct DatasetOutcome {
  EvalReport report;
  std::vector<std::string> warnings;
};

DatasetOutcome run_dataset(const AuditConfig& config, const DatasetSource& source,
                           std::string label) {
  DatasetOutcome outcome;

  IngestResult ingested = staged("ingest", label, [&] {
    AdapterSpec adapter = load_adapter(source.adapter);
    if (source.binarize_threshold) {
      if (!adapter.binarize) throw ConfigError("adapter '" + adapter.name + "' has no score scale");
      adapter.binarize->threshold = source.binarize_threshold;
    }
    return ingest(source.path, adapter);
  });
  if (!source.name.empty()) {
    ingested.dataset.name = source.name;
  } else if (ingested.dataset.name.empty()) {
    ingested.dataset.name = source.path.stem().string();
  }
  label = ingested.dataset.name;
  for (const auto& w : ingested.warnings) outcome.warnings.push_back(label + ": " + w);

  const fs::path dir = config.out_dir / label;
  staged("ingest", label, [&] {
    fs::create_directories(dir);
    write_jsonl(dir / "ingested.jsonl", ingested.dataset);
    return 0;
  });

  Dataset dataset = staged("dedup", label, [&] {
    std::vector<Json> log;
    Dataset out = ingested.dataset;
    if (config.dedup) {
      DedupResult result = deduplicate(ingested.dataset, *config.dedup);
      for (const Removal& r : result.log) log.push_back(to_json(r));
      out = std::move(result.dataset);
    }
    write_jsonl(dir / "canonical.jsonl", out);
    write_lines(dir / "canonical.jsonl.dedup.log", log);
    return out;
  });

  std::vector<ClassifierKind> classifiers;
  for (const SplitScheme scheme : config.schemes) {
    const std::string scheme_name(to_string(scheme));
    SplitPlan plan = staged("split", label, [&] {
      SplitOptions options;
      options.k = config.k;
      options.ratios = config.ratios;
      options.single_fold_threshold = config.single_fold_threshold;
      if (scheme != SplitScheme::original) {
        if (!config.seed) throw ConfigError("a seed is required for the " + scheme_name + " split");
        options.seed = *config.seed;
      }
      SplitPlan p = scheme == SplitScheme::original ? plan_original(dataset)
                    : scheme == SplitScheme::random_kfold
                        ? plan_random(dataset, options)
                        : plan_lexical(dataset, config.key, options);
      p.dataset = label;
      const ValidationReport problems = verify(p, dataset);
      if (!problems.empty()) {
        throw DataError("plan failed verification: " + problems.front().message);
      }
      write_plan(dir / ("plan_" + scheme_name + ".json"), p);
      return p;
    });
    for (const auto& w : plan.warnings) outcome.warnings.push_back(label + ": " + w);

    staged("ablate", label, [&] {
      for (AblationMode mode : config.modes) {
        std::vector<Json> rows;
        rows.reserve(dataset.instances.size());
        for (const Instance& instance : dataset.instances) {
          const Instance prepared =
              mode == AblationMode::only_pme ? normalize_discontiguous(instance) : instance;
          rows.push_back(to_json(ablate(prepared, mode)));
        }
        write_lines(dir / ("ablated_" + std::string(to_string(mode)) + ".jsonl"), rows);
      }
      if (config.export_splits) {
        export_splits(dataset, plan, config.modes, dir / ("export_" + scheme_name));
      }
      return 0;
    });

    EvalEntry entry = staged("audit", label, [&] {
      AuditOptions options;
      options.modes = config.modes;
      options.classifiers.clear();
      for (const auto& name : config.classifiers) options.classifiers.push_back(parse_classifier(name));
      options.nb_alpha = config.nb_alpha;
      options.nb_alpha_grid = config.nb_alpha_grid;
      options.nb_features.bigrams = config.nb_bigrams;
      return run_audit(dataset, plan, options);
    });
    outcome.report.entries.push_back(std::move(entry));
  }
  return outcome;
}

}  // namespace

RunResult run(const AuditConfig& config) {
  try {
    if (config.datasets.empty()) throw StageError("config", "", "no datasets configured", 2);
    if (config.schemes.empty()) throw StageError("config", "", "no split schemes configured", 2);
    for (SplitScheme scheme : config.schemes) {
      if (scheme != SplitScheme::original && !config.seed) {
        throw StageError("config", "",
                         "a seed is required for the " + std::string(to_string(scheme)) + " split",
                         2);
      }
    }
    for (const DatasetSource& d : config.datasets) {
      if (!fs::exists(d.path)) {
        throw StageError("config", d.name, "dataset path does not exist: " + d.path.string(), 2);
      }
    }
    staged("config", "", [&] { return fs::create_directories(config.out_dir); });

    std::vector<std::future<DatasetOutcome>> futures;
    for (const DatasetSource& source : config.datasets) {
      const std::string label =
          source.name.empty() ? source.path.stem().string() : source.name;
      futures.push_back(std::async(std::launch::async, run_dataset, std::cref(config),
                                   std::cref(source), label));
    }
    std::vector<EvalReport> reports;
    RunResult result;
    std::optional<StageError> first_error;
    for (auto& f : futures) {
      try {
        DatasetOutcome outcome = f.get();
        reports.push_back(std::move(outcome.report));
        for (auto& w : outcome.warnings) result.warnings.push_back(std::move(w));
      } catch (const StageError& e) {
        if (!first_error) first_error = e;
      }
    }
    if (first_error) throw *first_error;

    result.report = merge_reports(reports);
    staged("report", "", [&] {
      write_report(config.out_dir / "report.json", result.report);
      emit(result.report, ReportFormat::markdown, config.out_dir / "report.md");
      emit(result.report, ReportFormat::csv, config.out_dir / "report.csv");
      fs::remove(config.out_dir / "error.json");
      return 0;
    });
    return result;
  } catch (const StageError& e) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    std::ofstream out(config.out_dir / "error.json");
    if (out) out << error_record(e).dump(2) << '\n';
    throw;
  }
}

void export_splits(const Dataset& dataset, const SplitPlan& plan,
                   std::span<const AblationMode> modes, const fs::path& dir) {
  std::unordered_map<std::string, const Instance*> by_id;
  for (const Instance& instance : dataset.instances) by_id[instance.id] = &instance;

  Json manifest;
  manifest["schema_version"] = EvalReport::kSchemaVersion;
  manifest["dataset"] = plan.dataset.empty() ? dataset.name : plan.dataset;
  manifest["scheme"] = to_string(plan.scheme);
  manifest["k"] = plan.k;
  manifest["seed"] = plan.seed;
  manifest["reserved_tokens"] = {kPmeOpen, kPmeClose, kMaskToken};
  Json mode_names = Json::array();
  for (AblationMode m : modes) mode_names.push_back(to_string(m));
  manifest["modes"] = std::move(mode_names);
  Json folds = Json::array();

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto sizes = plan.sizes(f);
    folds.push_back({{"fold", f},
                     {"train", sizes[static_cast<std::size_t>(Partition::train)]},
                     {"dev", sizes[static_cast<std::size_t>(Partition::dev)]},
                     {"test", sizes[static_cast<std::size_t>(Partition::test)]}});
    for (AblationMode mode : modes) {
      const fs::path leaf = dir / ("fold_" + std::to_string(f)) / std::string(to_string(mode));
      fs::create_directories(leaf);
      std::vector<Json> rows[3];
      for (const auto& [id, part] : plan.folds[f]) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("export: plan references unknown id '" + id + "'");
        const Instance prepared =
            mode == AblationMode::only_pme ? normalize_discontiguous(*it->second) : *it->second;
        rows[static_cast<std::size_t>(part)].push_back(to_json(ablate(prepared, mode)));
      }
      for (Partition part : {Partition::train, Partition::dev, Partition::test}) {
        write_lines(leaf / (std::string(to_string(part)) + ".jsonl"),
                    rows[static_cast<std::size_t>(part)]);
      }
    }
  }
  manifest["folds"] = std::move(folds);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace figbias
