#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "figbias/errors.hpp"
#include "figbias/metrics.hpp"
#include "oracles.hpp"

using namespace figbias;

namespace {

constexpr Label M = Label::metaphoric;
constexpr Label L = Label::literal;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

EvalCell cell(std::size_t fold, AblationMode mode, std::string classifier, ConfusionCounts c) {
  EvalCell out;
  out.fold = fold;
  out.mode = mode;
  out.classifier = std::move(classifier);
  out.counts = c;
  out.metrics = metrics(c);
  out.majority_accuracy = 50.0;
  return out;
}

EvalReport sample_report(std::string dataset) {
  EvalEntry entry;
  entry.dataset = std::move(dataset);
  entry.scheme = "random";
  entry.k = 2;
  entry.seed = 3;
  for (std::size_t f = 0; f < 2; ++f) {
    entry.cells.push_back(cell(f, AblationMode::default_input, "nb", {40, 10, 10, 40}));
    entry.cells.push_back(cell(f, AblationMode::only_pme, "nb", {30, 20, 20, 30}));
    entry.cells.push_back(cell(f, AblationMode::masked, "nb", {45, 5, 5, 45}));
  }
  summarize(entry);
  EvalReport report;
  report.entries.push_back(entry);
  return report;
}

}  // namespace

TEST_CASE("confusion matrix example") {
  const std::vector<Label> gold = {M, M, M, L, L, L};
  const std::vector<Label> pred = {M, M, L, L, L, L};
  const ConfusionCounts counts = ConfusionCounts::from_pairs(gold, pred);
  CHECK(counts == ConfusionCounts{2, 0, 1, 3});
  const MetricBundle m = metrics(counts);
  CHECK(format1(m.precision_met) == "100.0");
  CHECK(format1(m.recall_met) == "66.7");
  CHECK(format1(m.f1_met) == "80.0");
  CHECK(format1(m.f1_lit) == "85.7");
  CHECK(format1(m.macro_f1) == "82.9");
}

TEST_CASE("edge cases") {
  const MetricBundle perfect = metrics({3, 0, 0, 3});
  CHECK(perfect.macro_f1 == 100.0);
  CHECK(perfect.accuracy == 100.0);

  // Always metaphoric on 33% metaphoric data.
  const MetricBundle all_met = metrics({1, 2, 0, 0});
  CHECK(format1(all_met.accuracy) == "33.3");
  CHECK(all_met.recall_met == 100.0);
  CHECK(all_met.precision_lit == 0.0);
  CHECK(all_met.recall_lit == 0.0);
  CHECK(all_met.f1_lit == 0.0);

  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), std::domain_error);
  CHECK_THROWS_AS(ConfusionCounts::from_pairs(std::vector<Label>{M}, std::vector<Label>{}),
                  std::invalid_argument);
}

TEST_CASE("metrics agree with the textbook oracle and are symmetric under class swap") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + gen() % 60;
    std::vector<Label> gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = gen() % 2 ? M : L;
      pred[i] = gen() % 3 ? gold[i] : (gen() % 2 ? M : L);
    }
    const MetricBundle m = metrics(ConfusionCounts::from_pairs(gold, pred));
    const auto o = fbtest::oracle_metrics(gold, pred);
    CHECK(m.accuracy == doctest::Approx(o.accuracy).epsilon(1e-12));
    CHECK(m.precision_met == doctest::Approx(o.p_met).epsilon(1e-12));
    CHECK(m.recall_lit == doctest::Approx(o.r_lit).epsilon(1e-12));
    CHECK(m.f1_met == doctest::Approx(o.f1_met).epsilon(1e-12));
    CHECK(m.macro_f1 == doctest::Approx(o.macro).epsilon(1e-12));

    auto swap = [](Label l) { return l == M ? L : M; };
    std::vector<Label> g2, p2;
    for (std::size_t i = 0; i < n; ++i) {
      g2.push_back(swap(gold[i]));
      p2.push_back(swap(pred[i]));
    }
    const MetricBundle s = metrics(ConfusionCounts::from_pairs(g2, p2));
    CHECK(s.macro_f1 == doctest::Approx(m.macro_f1).epsilon(1e-12));
    CHECK(s.f1_met == doctest::Approx(m.f1_lit).epsilon(1e-12));
    CHECK(s.accuracy == doctest::Approx(m.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("relative gaps") {
  CHECK(format_gap(relative_gap(75.78, 56.67)) == "(-25.2%)");
  CHECK(format_gap(relative_gap(87.36, 80.88)) == "(-7.4%)");
  CHECK(format_gap(relative_gap(88.81, 91.14)) == "(+2.6%)");
  CHECK(*relative_gap(50.0, 50.0) == 0.0);
  CHECK_FALSE(relative_gap(0.0, 10.0).has_value());
  CHECK(format_gap(std::nullopt) == "(n/a)");
  CHECK(round1(0.05) == doctest::Approx(0.1));
  CHECK(round1(-0.05) == doctest::Approx(-0.1));
  CHECK(format1(-0.04) == "0.0");
}

TEST_CASE("summaries average folds and compare against default") {
  EvalReport report = sample_report("toy");
  const EvalEntry& entry = report.entries[0];
  REQUIRE(entry.averages.size() == 3);
  for (const auto& s : entry.averages) {
    CHECK(s.folds == 2);
    if (s.mode == AblationMode::default_input) CHECK(*s.gap_macro_f1 == 0.0);
    if (s.mode == AblationMode::only_pme) {
      CHECK(s.metrics.macro_f1 == doctest::Approx(60.0));
      CHECK(*s.gap_macro_f1 == doctest::Approx(-25.0));
    }
    if (s.mode == AblationMode::masked) CHECK(*s.gap_accuracy == doctest::Approx(12.5));
  }
}

TEST_CASE("rendering") {
  const EvalReport report = sample_report("toy,set");

  const std::string md = render(report, ReportFormat::markdown);
  CHECK(md.find("| Dataset | Scheme | Classifier | Maj | Default | PME | Masked |") !=
        std::string::npos);
  CHECK(md.find("| 50.0 | 80.0 | 60.0 (-25.0%) | 90.0 (+12.5%) |") != std::string::npos);

  const std::string csv = render(report, ReportFormat::csv);
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "dataset,scheme,classifier,maj,default,only_pme,only_pme_gap,masked,masked_gap");
  const auto fields = split_csv_line(row);
  REQUIRE(fields.size() == 9);
  CHECK(fields[0] == "toy,set");
  CHECK(std::stod(fields[4]) == doctest::Approx(80.0));
  CHECK(std::stod(fields[6]) == doctest::Approx(-25.0));
  CHECK(std::stod(fields[8]) == doctest::Approx(12.5));

  SUBCASE("undefined gaps") {
    EvalReport zero;
    EvalEntry entry;
    entry.dataset = "z";
    entry.scheme = "original";
    entry.cells.push_back(cell(0, AblationMode::default_input, "majority", {0, 0, 5, 5}));
    entry.cells.push_back(cell(0, AblationMode::only_pme, "majority", {0, 0, 5, 5}));
    summarize(entry);
    zero.entries.push_back(entry);
    CHECK(render(zero, ReportFormat::markdown).find("(n/a)") == std::string::npos);
    CHECK(render(zero, ReportFormat::markdown, ReportMetric::accuracy).find("50.0 (+0.0%)") !=
          std::string::npos);
    CHECK(render(zero, ReportFormat::csv).find(",n/a") == std::string::npos);
    // Macro-F1 of the constant literal predictor is 33.3, so the gap is defined; force 0.
    EvalEntry degenerate = entry;
    degenerate.averages[0].metrics.macro_f1 = 0;
    degenerate.averages[1].gap_macro_f1 = std::nullopt;
    EvalReport r2;
    r2.entries.push_back(degenerate);
    CHECK(render(r2, ReportFormat::markdown).find("(n/a)") != std::string::npos);
    CHECK(render(r2, ReportFormat::csv).find("n/a") != std::string::npos);
  }
}

TEST_CASE("report JSON and merging") {
  const EvalReport a = sample_report("a");
  const EvalReport b = sample_report("b");
  const Json json = to_json(a);
  CHECK(json.at("schema_version") == 1);
  const EvalReport back = report_from_json(json);
  CHECK(to_json(back) == json);

  const EvalReport merged = merge_reports({a, b});
  REQUIRE(merged.entries.size() == 2);
  CHECK(merged.entries[1].dataset == "b");

  Json future = json;
  future["schema_version"] = 2;
  CHECK_THROWS_AS(report_from_json(future), DataError);

  auto path = std::filesystem::temp_directory_path() / "figbias_report_roundtrip.json";
  write_report(path, merged);
  CHECK(to_json(read_report(path)) == to_json(merged));
  std::filesystem::remove(path);

  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK_THROWS_AS(parse_report_format("xlsx"), ConfigError);
  CHECK(parse_report_metric("accuracy") == ReportMetric::accuracy);
  CHECK_THROWS_AS(parse_report_metric("auc"), ConfigError);
}
