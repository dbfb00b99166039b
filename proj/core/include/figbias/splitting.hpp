#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "figbias/corpus_model.hpp"

namespace figbias {

enum class SplitScheme { original, random_kfold, lexical_kfold };

std::string_view to_string(SplitScheme scheme);       // "original", "random", "lexical"
SplitScheme parse_split_scheme(std::string_view text);  // throws ConfigError

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;
};

struct SplitOptions {
  std::size_t k = 5;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  // Datasets whose test partition would exceed this many instances get one fold.
  std::size_t single_fold_threshold = 10000;
};

using FoldAssignment = std::vector<std::pair<std::string, Partition>>;

struct SplitPlan {
  std::string dataset;
  SplitScheme scheme = SplitScheme::original;
  std::size_t k = 1;
  SplitRatios ratios;
  std::optional<SplitKey> key;  // lexical plans only
  std::uint64_t seed = 0;
  // One entry per fold, sorted by instance id.
  std::vector<FoldAssignment> folds;
  std::vector<std::string> notes;
  std::vector<std::string> warnings;

  std::unordered_map<std::string, Partition> fold_map(std::size_t fold) const;
  /// Partition sizes of one fold, indexed by Partition.
  std::array<std::size_t, 3> sizes(std::size_t fold) const;
};

/// Single fold mirroring each instance's split_hint. Throws DataError naming
/// the instances that lack one.
SplitPlan plan_original(const Dataset& dataset);

/// Seeded permutation of the id-sorted instances. Fold f tests the f-th
/// contiguous block; dev is the block right after it (wrapping around).
SplitPlan plan_random(const Dataset& dataset, const SplitOptions& options);

/// Instances sharing a split key move together. Key groups (largest first,
/// then by key) are packed into k buckets of equal target size; fold f tests
/// bucket f, takes dev from the following buckets, and trains on the rest.
SplitPlan plan_lexical(const Dataset& dataset, const SplitKey& key, const SplitOptions& options);

/// Checks coverage, lexical disjointness, test coverage across folds and the
/// partition size tolerances. Empty report means the plan is valid.
ValidationReport verify(const SplitPlan& plan, const Dataset& dataset);

Json to_json(const SplitPlan& plan);
SplitPlan plan_from_json(const Json& object);  // throws DataError
SplitPlan read_plan(const std::filesystem::path& path);
void write_plan(const std::filesystem::path& path, const SplitPlan& plan);

}  // namespace figbias
