#include "figbias/baselines.hpp"

#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

#include "figbias/errors.hpp"
#include "figbias/ingestion.hpp"
#include "figbias/text.hpp"

namespace figbias {

namespace {

constexpr std::size_t idx(Label label) { return label == Label::metaphoric ? 0 : 1; }

}  // namespace

MajorityModel train_majority(std::span<const Label> train_labels) {
  if (train_labels.empty()) throw std::invalid_argument("majority: empty training set");
  LabelCounts counts;
  for (Label l : train_labels) counts.add(l);
  return {counts.majority()};
}

MajorityModel train_majority(std::span<const AblatedExample> train) {
  std::vector<Label> labels;
  labels.reserve(train.size());
  for (const auto& e : train) labels.push_back(e.label);
  return train_majority(labels);
}

MemorizerModel train_memorizer(std::span<const Instance> train, const SplitKey& key) {
  if (train.empty()) throw std::invalid_argument("memorizer: empty training set");
  MemorizerModel model;
  model.key = key;
  for (const Instance& instance : train) {
    model.table[resolve_split_key(instance, key).value].add(instance.label);
    model.global.add(instance.label);
  }
  return model;
}

Label predict(const MemorizerModel& model, const Instance& instance) {
  auto it = model.table.find(resolve_split_key(instance, model.key).value);
  if (it == model.table.end() || it->second.tied()) return model.global.majority();
  return it->second.majority();
}

std::vector<std::string> nb_features(std::string_view text, const NaiveBayesFeatures& features) {
  std::vector<std::string> tokens = split_whitespace(text);
  for (auto& t : tokens) t = fold_case(t);
  if (features.bigrams) {
    const std::size_t n = tokens.size();
    for (std::size_t i = 0; i + 1 < n; ++i) tokens.push_back(tokens[i] + "\x1f" + tokens[i + 1]);
  }
  return tokens;
}

NaiveBayesModel train_nb(std::span<const AblatedExample> train, double alpha,
                         NaiveBayesFeatures features) {
  if (!(alpha > 0)) throw std::invalid_argument("naive Bayes: alpha must be positive");
  LabelCounts docs;
  for (const auto& e : train) docs.add(e.label);
  if (docs.metaphoric == 0 || docs.literal == 0) {
    throw std::invalid_argument("naive Bayes: training set must contain both labels");
  }

  NaiveBayesModel model;
  model.alpha = alpha;
  model.features = features;
  std::vector<double> counts[2];
  double totals[2] = {0, 0};
  for (const auto& e : train) {
    const std::size_t c = idx(e.label);
    for (const std::string& f : nb_features(e.text, features)) {
      auto [it, inserted] = model.vocabulary.try_emplace(f, model.vocabulary.size());
      if (inserted) {
        counts[0].push_back(0);
        counts[1].push_back(0);
      }
      counts[c][it->second] += 1;
      totals[c] += 1;
    }
  }
  const double n_docs = static_cast<double>(docs.total());
  model.log_prior[0] = std::log(static_cast<double>(docs.metaphoric) / n_docs);
  model.log_prior[1] = std::log(static_cast<double>(docs.literal) / n_docs);
  const double v = static_cast<double>(model.vocabulary.size());
  for (std::size_t c = 0; c < 2; ++c) {
    model.log_likelihood[c].resize(counts[c].size());
    const double denom = totals[c] + alpha * v;
    for (std::size_t w = 0; w < counts[c].size(); ++w) {
      model.log_likelihood[c][w] = std::log((counts[c][w] + alpha) / denom);
    }
  }
  return model;
}

NbPrediction predict_nb(const NaiveBayesModel& model, std::string_view text) {
  NbPrediction out;
  out.score_metaphoric = model.log_prior[0];
  out.score_literal = model.log_prior[1];
  for (const std::string& f : nb_features(text, model.features)) {
    auto it = model.vocabulary.find(f);
    if (it == model.vocabulary.end()) continue;
    out.score_metaphoric += model.log_likelihood[0][it->second];
    out.score_literal += model.log_likelihood[1][it->second];
  }
  out.label = out.score_literal > out.score_metaphoric ? Label::literal : Label::metaphoric;
  return out;
}

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::majority:
      return "majority";
    case ClassifierKind::memorizer:
      return "memorizer";
    case ClassifierKind::naive_bayes:
      return "nb";
  }
  return "majority";
}

ClassifierKind parse_classifier(std::string_view text) {
  if (text == "majority") return ClassifierKind::majority;
  if (text == "memorizer") return ClassifierKind::memorizer;
  if (text == "nb" || text == "naive_bayes") return ClassifierKind::naive_bayes;
  throw ConfigError("unknown classifier '" + std::string(text) +
                    "' (expected majority, memorizer or nb)");
}

namespace {

struct FoldData {
  std::vector<const Instance*> train;
  std::vector<const Instance*> dev;
  std::vector<const Instance*> test;
};

struct ModeData {
  std::vector<Instance> train;
  std::vector<Instance> dev;
  std::vector<Instance> test;
  std::vector<AblatedExample> train_text;
  std::vector<AblatedExample> dev_text;
  std::vector<AblatedExample> test_text;
};

ModeData render_mode(const FoldData& fold, AblationMode mode) {
  ModeData data;
  auto fill = [mode](const std::vector<const Instance*>& src, std::vector<Instance>& views,
                     std::vector<AblatedExample>& texts) {
    views.reserve(src.size());
    texts.reserve(src.size());
    for (const Instance* instance : src) {
      const Instance prepared =
          mode == AblationMode::only_pme ? normalize_discontiguous(*instance) : *instance;
      texts.push_back(ablate(prepared, mode));
      views.push_back(visible_instance(prepared, mode));
    }
  };
  fill(fold.train, data.train, data.train_text);
  fill(fold.dev, data.dev, data.dev_text);
  fill(fold.test, data.test, data.test_text);
  return data;
}

std::vector<Label> gold_labels(const std::vector<AblatedExample>& examples) {
  std::vector<Label> labels;
  labels.reserve(examples.size());
  for (const auto& e : examples) labels.push_back(e.label);
  return labels;
}

double nb_macro_f1(const NaiveBayesModel& model, const std::vector<AblatedExample>& examples) {
  ConfusionCounts counts;
  for (const auto& e : examples) counts.add(e.label, predict_nb(model, e.text).label);
  return metrics(counts).macro_f1;
}

EvalCell evaluate_cell(const ModeData& data, std::size_t fold, AblationMode mode,
                       ClassifierKind kind, const AuditOptions& options, const SplitKey& key) {
  EvalCell cell;
  cell.fold = fold;
  cell.mode = mode;
  cell.classifier = std::string(to_string(kind));

  const std::vector<Label> gold = gold_labels(data.test_text);
  const MajorityModel majority = train_majority(std::span<const AblatedExample>(data.train_text));
  ConfusionCounts majority_counts;
  for (Label g : gold) majority_counts.add(g, majority.label);
  cell.majority_accuracy = metrics(majority_counts).accuracy;

  switch (kind) {
    case ClassifierKind::majority:
      cell.counts = majority_counts;
      break;
    case ClassifierKind::memorizer: {
      const MemorizerModel model = train_memorizer(data.train, key);
      for (std::size_t i = 0; i < data.test.size(); ++i) {
        cell.counts.add(gold[i], predict(model, data.test[i]));
      }
      break;
    }
    case ClassifierKind::naive_bayes: {
      double alpha = options.nb_alpha;
      if (options.nb_alpha_grid && !data.dev_text.empty()) {
        double best = -1;
        // Ties keep the larger alpha.
        for (auto it = std::rbegin(kAlphaGrid); it != std::rend(kAlphaGrid); ++it) {
          const double f1 =
              nb_macro_f1(train_nb(data.train_text, *it, options.nb_features), data.dev_text);
          if (f1 > best) {
            best = f1;
            alpha = *it;
          }
        }
      }
      cell.nb_alpha = alpha;
      const NaiveBayesModel model = train_nb(data.train_text, alpha, options.nb_features);
      for (std::size_t i = 0; i < data.test_text.size(); ++i) {
        cell.counts.add(gold[i], predict_nb(model, data.test_text[i].text).label);
      }
      break;
    }
  }
  cell.metrics = metrics(cell.counts);
  return cell;
}

}  // namespace

EvalEntry run_audit(const Dataset& dataset, const SplitPlan& plan, const AuditOptions& options) {
  if (options.modes.empty()) throw ConfigError("audit: no modes requested");
  if (options.classifiers.empty()) throw ConfigError("audit: no classifiers requested");
  const SplitKey key = options.memorizer_key.value_or(plan.key.value_or(SplitKey::surface()));

  std::unordered_map<std::string, const Instance*> by_id;
  for (const Instance& instance : dataset.instances) by_id[instance.id] = &instance;

  std::vector<FoldData> folds(plan.folds.size());
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    for (const auto& [id, part] : plan.folds[f]) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("audit: plan references unknown id '" + id + "'");
      switch (part) {
        case Partition::train:
          folds[f].train.push_back(it->second);
          break;
        case Partition::dev:
          folds[f].dev.push_back(it->second);
          break;
        case Partition::test:
          folds[f].test.push_back(it->second);
          break;
      }
    }
  }

  struct Job {
    std::size_t fold;
    AblationMode mode;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (AblationMode mode : options.modes) jobs.push_back({f, mode});
  }

  auto run_job = [&](const Job& job) {
    const std::string where =
        "fold " + std::to_string(job.fold) + ", mode " + std::string(to_string(job.mode));
    try {
      if (folds[job.fold].train.empty()) throw DataError("empty train partition");
      if (folds[job.fold].test.empty()) throw DataError("empty test partition");
      const ModeData data = render_mode(folds[job.fold], job.mode);
      std::vector<EvalCell> cells;
      for (ClassifierKind kind : options.classifiers) {
        cells.push_back(evaluate_cell(data, job.fold, job.mode, kind, options, key));
      }
      return cells;
    } catch (const std::invalid_argument& e) {
      throw DataError("audit (" + where + "): " + e.what());
    } catch (const DataError& e) {
      throw DataError("audit (" + where + "): " + e.what());
    }
  };

  std::vector<std::vector<EvalCell>> results(jobs.size());
  if (options.parallel && jobs.size() > 1) {
    std::vector<std::future<std::vector<EvalCell>>> futures;
    futures.reserve(jobs.size());
    for (const Job& job : jobs) {
      futures.push_back(std::async(std::launch::async, run_job, job));
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) results[j] = futures[j].get();
  } else {
    for (std::size_t j = 0; j < jobs.size(); ++j) results[j] = run_job(jobs[j]);
  }

  EvalEntry entry;
  entry.dataset = plan.dataset.empty() ? dataset.name : plan.dataset;
  entry.scheme = std::string(to_string(plan.scheme));
  entry.k = plan.k;
  entry.seed = plan.seed;
  for (auto& cells : results) {
    for (auto& cell : cells) entry.cells.push_back(std::move(cell));
  }
  summarize(entry);
  return entry;
}

}  // namespace figbias
