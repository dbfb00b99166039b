#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "figbias/ablation.hpp"
#include "figbias/baselines.hpp"
#include "figbias/splitting.hpp"
#include "figbias/vuac_sampler.hpp"

namespace {

using namespace figbias;

// n instances whose single-token expression is drawn from `keys` with a skew.
Dataset synthetic(std::size_t n, std::size_t keys, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset d;
  d.name = "bench";
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(gen);
    const std::size_t key = static_cast<std::size_t>(u * u * static_cast<double>(keys)) % keys;
    const std::size_t len = 8 + gen() % 16;
    const std::size_t pos = gen() % len;
    Instance instance;
    instance.id = "b" + std::to_string(i);
    instance.dataset = d.name;
    for (std::size_t t = 0; t < len; ++t) {
      instance.tokens.push_back(t == pos ? "k" + std::to_string(key)
                                         : "w" + std::to_string(gen() % 5000));
    }
    instance.spans = {{pos, pos + 1}};
    instance.label = (key + gen() % 4) % 3 == 0 ? Label::literal : Label::metaphoric;
    d.instances.push_back(std::move(instance));
  }
  return d;
}

void BM_PlanLexical(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = synthetic(n, n / 20 + 1, 1);
  SplitOptions options;
  options.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_lexical(d, SplitKey::surface(), options));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_PlanLexical)->Arg(1000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_Verify(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = synthetic(n, n / 20 + 1, 2);
  SplitOptions options;
  options.seed = 7;
  const SplitPlan plan = plan_lexical(d, SplitKey::surface(), options);
  for (auto _ : state) benchmark::DoNotOptimize(verify(plan, d));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * plan.k));
}
BENCHMARK(BM_Verify)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_NaiveBayes(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = synthetic(n, 200, 3);
  std::vector<AblatedExample> examples;
  for (const Instance& i : d.instances) examples.push_back(ablate(i, AblationMode::default_input));
  for (auto _ : state) {
    const NaiveBayesModel model = train_nb(examples);
    std::size_t met = 0;
    for (const auto& e : examples) met += predict_nb(model, e.text).label == Label::metaphoric;
    benchmark::DoNotOptimize(met);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_NaiveBayes)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Audit(benchmark::State& state) {
  const Dataset d = synthetic(5000, 250, 4);
  SplitOptions options;
  options.seed = 9;
  const SplitPlan plan = plan_random(d, options);
  AuditOptions audit;
  audit.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_audit(d, plan, audit));
}
BENCHMARK(BM_Audit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

TokenCorpus token_corpus(std::size_t sentences, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const char* tags[] = {"NOUN", "VERB", "ADJ", "DET", "ADP", "ADV"};
  TokenCorpus corpus;
  for (std::size_t s = 0; s < sentences; ++s) {
    CorpusSentence sentence;
    sentence.doc = "d" + std::to_string(s / 100);
    sentence.sent = s % 100;
    const std::size_t len = 10 + gen() % 20;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t word = gen() % 3000;
      sentence.tokens.push_back("t" + std::to_string(word));
      sentence.lemmas.push_back("l" + std::to_string(word / 3));
      sentence.pos.push_back(tags[word % 6]);
      sentence.met.push_back(gen() % 12 == 0);
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

void BM_SampleLiterals(benchmark::State& state) {
  const TokenCorpus corpus = token_corpus(static_cast<std::size_t>(state.range(0)), 5);
  const std::vector<Instance> met = extract_metaphoric(corpus, Granularity::span);
  SamplerConfig config;
  config.seed = 11;
  for (auto _ : state) benchmark::DoNotOptimize(sample_literals(corpus, met, config));
  state.counters["metaphoric"] = static_cast<double>(met.size());
}
BENCHMARK(BM_SampleLiterals)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
