#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "figbias/ablation.hpp"
#include "figbias/corpus_model.hpp"
#include "figbias/metrics.hpp"
#include "figbias/splitting.hpp"

namespace figbias {

// Every tie in this module resolves to Label::metaphoric.

struct LabelCounts {
  std::size_t metaphoric = 0;
  std::size_t literal = 0;

  void add(Label label) { label == Label::metaphoric ? ++metaphoric : ++literal; }
  std::size_t total() const { return metaphoric + literal; }
  /// Majority label, metaphoric on ties.
  Label majority() const { return literal > metaphoric ? Label::literal : Label::metaphoric; }
  bool tied() const { return literal == metaphoric; }
};

/// Constant classifier predicting the most frequent training label.
struct MajorityModel {
  Label label = Label::metaphoric;
};

/// Throws std::invalid_argument on an empty training set.
MajorityModel train_majority(std::span<const Label> train_labels);
MajorityModel train_majority(std::span<const AblatedExample> train);

/// Per-key label table: predicts the key's majority label when the key was
/// seen in training, the global majority otherwise (and on per-key ties).
struct MemorizerModel {
  SplitKey key;
  std::unordered_map<std::string, LabelCounts> table;
  LabelCounts global;
};

MemorizerModel train_memorizer(std::span<const Instance> train, const SplitKey& key);
Label predict(const MemorizerModel& model, const Instance& instance);

struct NaiveBayesFeatures {
  bool bigrams = false;
};

/// Multinomial naive Bayes over lowercased whitespace tokens.
struct NaiveBayesModel {
  double alpha = 1.0;
  NaiveBayesFeatures features;
  std::unordered_map<std::string, std::size_t> vocabulary;
  // Indexed by Label (metaphoric = 0, literal = 1).
  double log_prior[2] = {0, 0};
  // log_likelihood[c][vocabulary index], Laplace-smoothed.
  std::vector<double> log_likelihood[2];
};

struct NbPrediction {
  Label label = Label::metaphoric;
  double score_metaphoric = 0;
  double score_literal = 0;
};

std::vector<std::string> nb_features(std::string_view text, const NaiveBayesFeatures& features);

/// Throws std::invalid_argument unless both labels occur in `train`, or if
/// alpha <= 0.
NaiveBayesModel train_nb(std::span<const AblatedExample> train, double alpha = 1.0,
                         NaiveBayesFeatures features = {});
/// argmax of log-prior plus summed token log-likelihoods; unseen tokens are ignored.
NbPrediction predict_nb(const NaiveBayesModel& model, std::string_view text);

enum class ClassifierKind { majority, memorizer, naive_bayes };

std::string_view to_string(ClassifierKind kind);           // "majority", "memorizer", "nb"
ClassifierKind parse_classifier(std::string_view text);    // throws ConfigError

struct AuditOptions {
  std::vector<AblationMode> modes = {AblationMode::default_input, AblationMode::only_pme,
                                     AblationMode::masked};
  std::vector<ClassifierKind> classifiers = {ClassifierKind::majority, ClassifierKind::memorizer,
                                             ClassifierKind::naive_bayes};
  double nb_alpha = 1.0;
  // Pick alpha from kAlphaGrid by dev macro-F1 when the fold has dev data.
  bool nb_alpha_grid = false;
  NaiveBayesFeatures nb_features;
  // Memorizer key; defaults to the plan's key, else surface.
  std::optional<SplitKey> memorizer_key;
  // Evaluate (fold, mode, classifier) cells on worker threads.
  bool parallel = true;
};

inline constexpr double kAlphaGrid[] = {0.1, 0.5, 1.0};

/// Trains every classifier on every fold's train partition under every mode
/// and evaluates on the fold's test partition. Cells are ordered by fold, then
/// mode, then classifier, and averaged rows carry gaps against default.
/// Training errors are rethrown with the fold and mode attached.
EvalEntry run_audit(const Dataset& dataset, const SplitPlan& plan, const AuditOptions& options);

}  // namespace figbias
