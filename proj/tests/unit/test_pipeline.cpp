#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "figbias/errors.hpp"
#include "figbias/pipeline.hpp"
#include "fixtures.hpp"

using namespace figbias;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("figbias_pipeline_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    Dataset d = fbtest::memorization_dataset(31, false);
    d.name = "mem";
    for (auto& i : d.instances) i.dataset = "mem";
    write_jsonl(root / "mem.jsonl", d);
  }
  ~Workspace() { fs::remove_all(root); }

  AuditConfig config() const {
    Json object = {{"datasets", Json::array({"mem.jsonl"})},
                   {"schemes", Json::array({"random", "lexical"})},
                   {"seed", 17},
                   {"classifiers", Json::array({"majority", "memorizer"})},
                   {"out_dir", "out"}};
    return config_from_json(object, root);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config parsing") {
  const fs::path base = "/data/project";
  Json object = Json::parse(R"({
    "datasets": ["a.jsonl", {"name": "llc", "path": "/raw/llc.tsv", "adapter": "llc",
                             "binarize_threshold": 2.0}],
    "schemes": ["original", "lexical"], "key": "head:1", "k": 3,
    "ratios": {"train": 0.8, "dev": 0.1, "test": 0.1}, "seed": 5, "modes": ["default", "masked"],
    "classifiers": ["nb"], "out_dir": "results", "dedup": "none",
    "nb_alpha": 0.5, "nb_bigrams": true, "export": true
  })");
  const AuditConfig config = config_from_json(object, base);
  REQUIRE(config.datasets.size() == 2);
  CHECK(config.datasets[0].path == base / "a.jsonl");
  CHECK(config.datasets[0].adapter == "canonical");
  CHECK(config.datasets[1].path == "/raw/llc.tsv");
  CHECK(config.datasets[1].binarize_threshold == 2.0);
  CHECK(config.key == SplitKey::head(1));
  CHECK(config.k == 3);
  CHECK(config.ratios.train == doctest::Approx(0.8));
  CHECK(config.seed == 5u);
  CHECK(config.modes.size() == 2);
  CHECK(config.out_dir == base / "results");
  CHECK_FALSE(config.dedup.has_value());
  CHECK(config.nb_bigrams);
  CHECK(config.export_splits);

  const AuditConfig again = config_from_json(to_json(config), base);
  CHECK(to_json(again) == to_json(config));

  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"datasets":[],"colour":"red"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"datasets":[],"schemes":["stratified"]})")),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"datasets":[],"k":"five"})")), ConfigError);
}

TEST_CASE("end-to-end run") {
  Workspace ws;
  const AuditConfig config = ws.config();
  const RunResult result = run(config);

  REQUIRE(result.report.entries.size() == 2);
  CHECK(result.report.entries[0].dataset == "mem");
  CHECK(result.report.entries[0].scheme == "random");
  CHECK(result.report.entries[1].scheme == "lexical");
  CHECK(result.report.entries[0].cells.size() == 5 * 3 * 2);

  const fs::path out = ws.root / "out";
  for (const char* file : {"report.json", "report.md", "report.csv", "mem/canonical.jsonl",
                           "mem/plan_random.json", "mem/plan_lexical.json",
                           "mem/ablated_default.jsonl", "mem/ablated_only_pme.jsonl",
                           "mem/ablated_masked.jsonl"}) {
    CHECK_MESSAGE(fs::exists(out / file), file);
  }
  CHECK_FALSE(fs::exists(out / "error.json"));
  CHECK(read_report(out / "report.json").entries.size() == 2);

  // Written plans pass verification against the written dataset.
  const Dataset canonical = read_jsonl(out / "mem/canonical.jsonl");
  CHECK(verify(read_plan(out / "mem/plan_lexical.json"), canonical).empty());

  SUBCASE("reruns are byte-identical") {
    const std::string report = slurp(out / "report.json");
    const std::string plan = slurp(out / "mem/plan_lexical.json");
    run(config);
    CHECK(slurp(out / "report.json") == report);
    CHECK(slurp(out / "mem/plan_lexical.json") == plan);
  }

  SUBCASE("only-PME memorizer collapses under the lexical split") {
    for (const auto& entry : result.report.entries) {
      for (const auto& s : entry.averages) {
        if (s.classifier != "memorizer" || s.mode != AblationMode::only_pme) continue;
        if (entry.scheme == "random") CHECK(s.metrics.accuracy > 99.0);
        if (entry.scheme == "lexical") CHECK(s.metrics.accuracy < 60.0);
      }
    }
  }
}

TEST_CASE("stage errors") {
  Workspace ws;

  SUBCASE("unknown classifier fails the audit stage") {
    AuditConfig config = ws.config();
    config.classifiers = {"majority", "transformer"};
    try {
      run(config);
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "audit");
      CHECK(e.dataset() == "mem");
      CHECK(e.exit_code() == 2);
      const Json record = Json::parse(slurp(config.out_dir / "error.json"));
      CHECK(record.at("status") == "error");
      CHECK(record.at("stage") == "audit");
      CHECK(record.at("exit_code") == 2);
      CHECK(record == error_record(e));
    }
  }

  SUBCASE("random splits need a seed") {
    AuditConfig config = ws.config();
    config.seed.reset();
    try {
      run(config);
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "config");
      CHECK(e.exit_code() == 2);
    }
  }

  SUBCASE("missing input is a configuration error") {
    AuditConfig config = ws.config();
    config.datasets[0].path = ws.root / "absent.jsonl";
    try {
      run(config);
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "config");
      CHECK(e.exit_code() == 2);
    }
  }

  SUBCASE("unreadable input fails the ingest stage") {
    std::ofstream(ws.root / "broken.jsonl") << "{not json\n";
    AuditConfig config = ws.config();
    config.datasets[0].path = ws.root / "broken.jsonl";
    try {
      run(config);
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
      CHECK(e.exit_code() == 1);
    }
  }

  SUBCASE("original scheme without split hints fails the split stage") {
    AuditConfig config = ws.config();
    config.schemes = {SplitScheme::original};
    try {
      run(config);
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "split");
      CHECK(e.exit_code() == 1);
    }
  }

  SUBCASE("a success clears an old error record") {
    AuditConfig config = ws.config();
    config.classifiers = {"nope"};
    CHECK_THROWS_AS(run(config), StageError);
    CHECK(fs::exists(config.out_dir / "error.json"));
    run(ws.config());
    CHECK_FALSE(fs::exists(config.out_dir / "error.json"));
  }
}

TEST_CASE("split export tree") {
  Dataset d = fbtest::keyed_dataset(60, 10, 2);
  SplitOptions options;
  options.seed = 6;
  options.k = 3;
  const SplitPlan plan = plan_random(d, options);
  const fs::path dir = fs::temp_directory_path() / ("figbias_export_" + std::to_string(std::random_device{}()));
  const std::vector<AblationMode> modes = {AblationMode::default_input, AblationMode::masked};
  export_splits(d, plan, modes, dir);

  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("schema_version") == 1);
  CHECK(manifest.at("k") == 3);
  CHECK(manifest.at("seed") == 6);
  CHECK(manifest.at("modes") == Json::array({"default", "masked"}));
  CHECK(manifest.at("reserved_tokens") == Json::array({"<PME>", "</PME>", "<masked>"}));

  for (std::size_t f = 0; f < 3; ++f) {
    const auto sizes = plan.sizes(f);
    for (const auto& mode : {"default", "masked"}) {
      const fs::path fold = dir / ("fold_" + std::to_string(f)) / mode;
      std::size_t part = 0;
      for (const char* name : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
        std::ifstream in(fold / name);
        std::size_t rows = 0;
        for (std::string line; std::getline(in, line);) {
          if (line.empty()) continue;
          const AblatedExample example = ablated_from_json(Json::parse(line));
          CHECK(to_string(example.mode) == std::string(mode));
          ++rows;
        }
        CHECK(rows == sizes[part++]);
      }
    }
  }
  fs::remove_all(dir);
}
