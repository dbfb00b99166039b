#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "figbias/ablation.hpp"
#include "figbias/baselines.hpp"
#include "figbias/errors.hpp"
#include "figbias/ingestion.hpp"
#include "figbias/metrics.hpp"
#include "figbias/pipeline.hpp"
#include "figbias/splitting.hpp"
#include "figbias/vuac_sampler.hpp"

namespace fs = std::filesystem;
using namespace figbias;

namespace {

void print_error(const std::string& stage, const std::string& message, int code) {
  Json record;
  record["status"] = "error";
  record["stage"] = stage;
  record["message"] = message;
  record["exit_code"] = code;
  std::cerr << record.dump() << '\n';
}

void write_json_lines(const fs::path& path, const std::vector<Json>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Json& row : rows) out << row.dump() << '\n';
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<AblationMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<AblationMode> modes;
  for (const auto& n : names) modes.push_back(parse_ablation_mode(n));
  return modes;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& what) {
  if (!seed) throw ConfigError(what + " needs --seed (or FIGBIAS_SEED)");
  return *seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figbias: dataset bias audits for metaphor identification"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and exit");
  app.require_subcommand(1);

  std::string stage = "cli";

  // ingest
  struct {
    std::string adapter = "canonical";
    fs::path in, out;
    std::optional<double> threshold;
    std::string dedup = "exact_instance";
    std::optional<fs::path> duplication_report;
  } ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a raw dataset to canonical JSONL");
  ingest_cmd->add_option("--adapter", ingest_args.adapter,
                         "Builtin adapter name or adapter JSON file")->capture_default_str();
  ingest_cmd->add_option("--in", ingest_args.in, "Raw input file")->required();
  ingest_cmd->add_option("--out", ingest_args.out,
                         "Canonical JSONL output; removals go to <out>.dedup.log")->required();
  ingest_cmd->add_option("--binarize-threshold", ingest_args.threshold,
                         "Score threshold for scored datasets (default: scale midpoint)");
  ingest_cmd->add_option("--dedup", ingest_args.dedup,
                         "exact_instance, context_and_span or none")->capture_default_str();
  ingest_cmd->add_option("--duplication-report", ingest_args.duplication_report,
                         "Write context-duplication groups to this JSON file");

  // ablate
  struct {
    std::string mode;
    fs::path in, out;
  } ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "Render instances under one input mode");
  ablate_cmd->add_option("--mode", ablate_args.mode, "default, only_pme or masked")->required();
  ablate_cmd->add_option("--in", ablate_args.in, "Canonical JSONL")->required();
  ablate_cmd->add_option("--out", ablate_args.out, "AblatedExample JSONL")->required();

  // split
  struct {
    std::string scheme = "random";
    std::string key = "surface";
    std::size_t k = 5;
    std::optional<std::uint64_t> seed;
    std::vector<double> ratios = {0.7, 0.1, 0.2};
    std::size_t threshold = 10000;
    fs::path in, out;
  } split_args;
  auto* split_cmd = app.add_subcommand("split", "Build a train/dev/test plan");
  split_cmd->add_option("--scheme", split_args.scheme, "original, random or lexical")
      ->capture_default_str();
  split_cmd->add_option("--key", split_args.key, "surface, lemma or head:<k>")->capture_default_str();
  split_cmd->add_option("--k", split_args.k, "Number of folds")->capture_default_str();
  split_cmd->add_option("--seed", split_args.seed, "Seed")->envname("FIGBIAS_SEED");
  split_cmd->add_option("--ratios", split_args.ratios, "train,dev,test ratios")
      ->delimiter(',')->expected(3)->capture_default_str();
  split_cmd->add_option("--single-fold-threshold", split_args.threshold,
                        "Use one fold when the test partition would exceed this size")
      ->capture_default_str();
  split_cmd->add_option("--in", split_args.in, "Canonical JSONL")->required();
  split_cmd->add_option("--out", split_args.out, "Plan JSON")->required();

  // audit
  struct {
    fs::path in, plan, out;
    std::vector<std::string> modes = {"default", "only_pme", "masked"};
    std::vector<std::string> classifiers = {"majority", "memorizer", "nb"};
    double alpha = 1.0;
    bool alpha_grid = false;
    bool bigrams = false;
    std::optional<std::string> memorizer_key;
    bool serial = false;
  } audit_args;
  auto* audit_cmd = app.add_subcommand("audit", "Train and evaluate baselines on a plan");
  audit_cmd->add_option("--in", audit_args.in, "Canonical JSONL")->required();
  audit_cmd->add_option("--plan", audit_args.plan, "Plan JSON")->required();
  audit_cmd->add_option("--modes", audit_args.modes, "Comma-separated input modes")
      ->delimiter(',')->capture_default_str();
  audit_cmd->add_option("--classifiers", audit_args.classifiers,
                        "Comma-separated classifiers: majority, memorizer, nb")
      ->delimiter(',')->capture_default_str();
  audit_cmd->add_option("--nb-alpha", audit_args.alpha, "Naive Bayes smoothing")->capture_default_str();
  audit_cmd->add_flag("--nb-alpha-grid", audit_args.alpha_grid,
                      "Pick alpha from {0.1, 0.5, 1.0} by dev macro-F1");
  audit_cmd->add_flag("--nb-bigrams", audit_args.bigrams, "Add bigram features");
  audit_cmd->add_option("--memorizer-key", audit_args.memorizer_key,
                        "Memorizer key (default: the plan's key, else surface)");
  audit_cmd->add_flag("--serial", audit_args.serial, "Evaluate cells on one thread");
  audit_cmd->add_option("--out", audit_args.out, "Report JSON")->required();

  // sample
  struct {
    fs::path in, out;
    std::optional<fs::path> log;
    double ratio = 1.0;
    std::optional<std::uint64_t> seed;
    std::string granularity = "span";
    std::optional<std::size_t> max_per_expression;
  } sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Build a balanced dataset from a token corpus");
  sample_cmd->add_option("--in", sample_args.in, "Token corpus JSONL")->required();
  sample_cmd->add_option("--ratio", sample_args.ratio, "Literal instances per metaphoric instance")
      ->capture_default_str();
  sample_cmd->add_option("--seed", sample_args.seed, "Seed")->envname("FIGBIAS_SEED");
  sample_cmd->add_option("--granularity", sample_args.granularity, "token or span")
      ->capture_default_str();
  sample_cmd->add_option("--max-per-expression", sample_args.max_per_expression,
                         "Cap on literal draws per expression");
  sample_cmd->add_option("--out", sample_args.out, "Canonical JSONL")->required();
  sample_cmd->add_option("--log", sample_args.log, "Tier statistics JSON");

  // report
  struct {
    std::vector<fs::path> in;
    std::string format = "markdown";
    std::string metric = "macro_f1";
    std::optional<fs::path> out;
  } report_args;
  auto* report_cmd = app.add_subcommand("report", "Render or merge report JSON files");
  report_cmd->add_option("--in", report_args.in, "Report JSON (repeat to merge)")->required();
  report_cmd->add_option("--format", report_args.format, "markdown, csv or json")
      ->capture_default_str();
  report_cmd->add_option("--metric", report_args.metric, "macro_f1 or accuracy")
      ->capture_default_str();
  report_cmd->add_option("--out", report_args.out, "Output path (default: stdout)");

  // export
  struct {
    fs::path in, plan, out;
    std::vector<std::string> modes = {"default", "only_pme", "masked"};
  } export_args;
  auto* export_cmd =
      app.add_subcommand("export", "Write per-fold, per-mode train/dev/test JSONL trees");
  export_cmd->add_option("--in", export_args.in, "Canonical JSONL")->required();
  export_cmd->add_option("--plan", export_args.plan, "Plan JSON")->required();
  export_cmd->add_option("--modes", export_args.modes, "Comma-separated input modes")
      ->delimiter(',')->capture_default_str();
  export_cmd->add_option("--out", export_args.out, "Output directory")->required();

  // run
  struct {
    fs::path config;
    std::optional<fs::path> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> k;
    std::vector<std::string> schemes, modes, classifiers;
    std::optional<std::string> key;
    std::optional<std::size_t> threshold;
    bool export_splits = false;
  } run_args;
  auto* run_cmd = app.add_subcommand("run", "Run the whole pipeline from a JSON config");
  run_cmd->add_option("--config", run_args.config, "Config JSON")->required();
  run_cmd->add_option("--out-dir", run_args.out_dir, "Override out_dir");
  run_cmd->add_option("--seed", run_args.seed, "Override seed")->envname("FIGBIAS_SEED");
  run_cmd->add_option("--k", run_args.k, "Override k");
  run_cmd->add_option("--schemes", run_args.schemes, "Override schemes")->delimiter(',');
  run_cmd->add_option("--key", run_args.key, "Override split key");
  run_cmd->add_option("--modes", run_args.modes, "Override modes")->delimiter(',');
  run_cmd->add_option("--classifiers", run_args.classifiers, "Override classifiers")->delimiter(',');
  run_cmd->add_option("--single-fold-threshold", run_args.threshold, "Override threshold");
  run_cmd->add_flag("--export", run_args.export_splits, "Also write export trees");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest_cmd) {
      stage = "ingest";
      AdapterSpec adapter = load_adapter(ingest_args.adapter);
      if (ingest_args.threshold) {
        if (!adapter.binarize) {
          throw ConfigError("adapter '" + adapter.name + "' has no score to binarize");
        }
        adapter.binarize->threshold = ingest_args.threshold;
      }
      IngestResult result = ingest(ingest_args.in, adapter);
      warn(result.warnings);
      stage = "dedup";
      std::vector<Json> log;
      Dataset dataset = std::move(result.dataset);
      if (ingest_args.dedup != "none") {
        DedupResult deduped = deduplicate(dataset, parse_dedup_scope(ingest_args.dedup));
        for (const Removal& r : deduped.log) log.push_back(to_json(r));
        dataset = std::move(deduped.dataset);
      }
      write_jsonl(ingest_args.out, dataset);
      write_json_lines(ingest_args.out.string() + ".dedup.log", log);
      if (ingest_args.duplication_report) {
        std::ofstream out(*ingest_args.duplication_report);
        if (!out) throw DataError("cannot write " + ingest_args.duplication_report->string());
        out << Json(detect_context_duplication(dataset)).dump(1) << '\n';
      }
      std::cerr << dataset.instances.size() << " instances, " << log.size() << " duplicates removed, "
                << format1(dataset.metaphoric_percent()) << "% metaphoric\n";
    } else if (*ablate_cmd) {
      stage = "ablate";
      const AblationMode mode = parse_ablation_mode(ablate_args.mode);
      const Dataset dataset = read_jsonl(ablate_args.in);
      std::vector<Json> rows;
      for (const Instance& instance : dataset.instances) {
        const Instance prepared =
            mode == AblationMode::only_pme ? normalize_discontiguous(instance) : instance;
        rows.push_back(to_json(ablate(prepared, mode)));
      }
      write_json_lines(ablate_args.out, rows);
    } else if (*split_cmd) {
      stage = "split";
      const SplitScheme scheme = parse_split_scheme(split_args.scheme);
      const SplitKey key = SplitKey::parse(split_args.key);
      const Dataset dataset = read_jsonl(split_args.in);
      SplitOptions options;
      options.k = split_args.k;
      options.ratios = {split_args.ratios[0], split_args.ratios[1], split_args.ratios[2]};
      options.single_fold_threshold = split_args.threshold;
      SplitPlan plan;
      if (scheme == SplitScheme::original) {
        plan = plan_original(dataset);
      } else {
        options.seed = require_seed(split_args.seed, "the " + split_args.scheme + " scheme");
        plan = scheme == SplitScheme::random_kfold ? plan_random(dataset, options)
                                                   : plan_lexical(dataset, key, options);
      }
      warn(plan.warnings);
      const ValidationReport problems = verify(plan, dataset);
      for (const auto& p : problems) std::cerr << "violation: " << p.id << ": " << p.message << '\n';
      if (!problems.empty()) throw DataError("plan failed verification");
      write_plan(split_args.out, plan);
    } else if (*audit_cmd) {
      stage = "audit";
      AuditOptions options;
      options.modes = parse_modes(audit_args.modes);
      options.classifiers.clear();
      for (const auto& c : audit_args.classifiers) options.classifiers.push_back(parse_classifier(c));
      options.nb_alpha = audit_args.alpha;
      options.nb_alpha_grid = audit_args.alpha_grid;
      options.nb_features.bigrams = audit_args.bigrams;
      if (audit_args.memorizer_key) options.memorizer_key = SplitKey::parse(*audit_args.memorizer_key);
      options.parallel = !audit_args.serial;
      const Dataset dataset = read_jsonl(audit_args.in);
      const SplitPlan plan = read_plan(audit_args.plan);
      EvalReport report;
      report.entries.push_back(run_audit(dataset, plan, options));
      write_report(audit_args.out, report);
    } else if (*sample_cmd) {
      stage = "sample";
      SamplerConfig config;
      config.ratio = sample_args.ratio;
      config.seed = require_seed(sample_args.seed, "sampling");
      config.granularity = parse_granularity(sample_args.granularity);
      if (sample_args.max_per_expression) {
        config.max_literals_per_expression = *sample_args.max_per_expression;
      }
      const TokenCorpus corpus = read_token_corpus(sample_args.in);
      const std::vector<Instance> metaphoric = extract_metaphoric(corpus, config.granularity);
      const LiteralSample literal = sample_literals(corpus, metaphoric, config);
      const Dataset dataset = assemble(metaphoric, literal, config);
      write_jsonl(sample_args.out, dataset);
      if (sample_args.log) {
        std::ofstream out(*sample_args.log);
        if (!out) throw DataError("cannot write " + sample_args.log->string());
        out << to_json(literal.log, config).dump(2) << '\n';
      }
      std::cerr << dataset.provenance << '\n';
    } else if (*report_cmd) {
      stage = "report";
      const ReportFormat format = parse_report_format(report_args.format);
      const ReportMetric metric = parse_report_metric(report_args.metric);
      std::vector<EvalReport> reports;
      for (const auto& path : report_args.in) reports.push_back(read_report(path));
      const EvalReport merged = merge_reports(reports);
      if (report_args.out) {
        emit(merged, format, *report_args.out, metric);
      } else {
        std::cout << render(merged, format, metric);
      }
    } else if (*export_cmd) {
      stage = "export";
      const std::vector<AblationMode> modes = parse_modes(export_args.modes);
      const Dataset dataset = read_jsonl(export_args.in);
      const SplitPlan plan = read_plan(export_args.plan);
      export_splits(dataset, plan, modes, export_args.out);
    } else if (*run_cmd) {
      stage = "config";
      AuditConfig config = load_config(run_args.config);
      if (run_args.out_dir) config.out_dir = *run_args.out_dir;
      if (run_args.seed) config.seed = run_args.seed;
      if (run_args.k) config.k = *run_args.k;
      if (!run_args.schemes.empty()) {
        config.schemes.clear();
        for (const auto& s : run_args.schemes) config.schemes.push_back(parse_split_scheme(s));
      }
      if (run_args.key) config.key = SplitKey::parse(*run_args.key);
      if (!run_args.modes.empty()) config.modes = parse_modes(run_args.modes);
      if (!run_args.classifiers.empty()) config.classifiers = run_args.classifiers;
      if (run_args.threshold) config.single_fold_threshold = *run_args.threshold;
      if (run_args.export_splits) config.export_splits = true;
      const RunResult result = run(config);
      warn(result.warnings);
      std::cout << render(result.report, ReportFormat::markdown);
    }
  } catch (const StageError& e) {
    std::cerr << error_record(e).dump() << '\n';
    return e.exit_code();
  } catch (const ConfigError& e) {
    print_error(stage, e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    print_error(stage, e.what(), 1);
    return 1;
  }
  return 0;
}
