#include "figbias/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "figbias/errors.hpp"
#include "figbias/rng.hpp"

namespace figbias {

namespace {

constexpr double kEps = 1e-9;

std::size_t round_size(double x) { return static_cast<std::size_t>(std::llround(x)); }

std::vector<std::string> sorted_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  ids.reserve(dataset.instances.size());
  for (const Instance& i : dataset.instances) ids.push_back(i.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.dev < 0 || r.test <= 0 || std::abs(r.train + r.dev + r.test - 1.0) > 1e-6) {
    throw ConfigError("split ratios must be non-negative, with test > 0, and sum to 1");
  }
}

FoldAssignment sorted_assignment(std::unordered_map<std::string, Partition> map) {
  FoldAssignment out(map.begin(), map.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t effective_folds(std::size_t n, const SplitOptions& options,
                            std::vector<std::string>& notes) {
  if (options.k == 0) throw ConfigError("k must be at least 1");
  if (options.k > 1 && static_cast<double>(n) * options.ratios.test >
                           static_cast<double>(options.single_fold_threshold)) {
    notes.push_back("test partition would exceed " +
                    std::to_string(options.single_fold_threshold) +
                    " instances; using a single train/dev/test split");
    return 1;
  }
  return options.k;
}

struct KeyGroup {
  std::string key;
  std::vector<std::string> ids;
  std::size_t metaphoric = 0;
  std::size_t size() const { return ids.size(); }
};

std::vector<KeyGroup> group_by_key(const Dataset& dataset, const SplitKey& key,
                                   std::size_t& fallbacks) {
  std::map<std::string, KeyGroup> groups;
  fallbacks = 0;
  for (const Instance& instance : dataset.instances) {
    ResolvedKey resolved = resolve_split_key(instance, key);
    if (resolved.fell_back) ++fallbacks;
    KeyGroup& g = groups[resolved.value];
    g.key = resolved.value;
    g.ids.push_back(instance.id);
    if (instance.label == Label::metaphoric) ++g.metaphoric;
  }
  std::vector<KeyGroup> out;
  for (auto& [_, g] : groups) {
    std::sort(g.ids.begin(), g.ids.end());
    out.push_back(std::move(g));
  }
  std::stable_sort(out.begin(), out.end(), [](const KeyGroup& a, const KeyGroup& b) {
    return a.size() > b.size();
  });
  return out;
}

// Adds groups (in candidate order) while they fit under `target`, then adds
// the single remaining group that best closes the gap, if any improves it.
std::vector<std::size_t> best_fit(const std::vector<KeyGroup>& groups,
                                  const std::vector<std::size_t>& candidates, double target) {
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(candidates.size(), false);
  double filled = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double s = static_cast<double>(groups[candidates[c]].size());
    if (filled + s <= target + kEps) {
      filled += s;
      taken[c] = true;
      chosen.push_back(candidates[c]);
    }
  }
  if (filled + kEps < target) {
    std::optional<std::size_t> best;
    double best_err = target - filled;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (taken[c]) continue;
      double err = std::abs(filled + static_cast<double>(groups[candidates[c]].size()) - target);
      if (err + kEps < best_err) {
        best_err = err;
        best = c;
      }
    }
    if (best) chosen.push_back(candidates[*best]);
  }
  return chosen;
}

}  // namespace

std::string_view to_string(SplitScheme scheme) {
  switch (scheme) {
    case SplitScheme::original:
      return "original";
    case SplitScheme::random_kfold:
      return "random";
    case SplitScheme::lexical_kfold:
      return "lexical";
  }
  return "original";
}

SplitScheme parse_split_scheme(std::string_view text) {
  if (text == "original") return SplitScheme::original;
  if (text == "random") return SplitScheme::random_kfold;
  if (text == "lexical") return SplitScheme::lexical_kfold;
  throw ConfigError("unknown split scheme '" + std::string(text) +
                    "' (expected original, random or lexical)");
}

std::unordered_map<std::string, Partition> SplitPlan::fold_map(std::size_t fold) const {
  std::unordered_map<std::string, Partition> out;
  for (const auto& [id, p] : folds.at(fold)) out[id] = p;
  return out;
}

std::array<std::size_t, 3> SplitPlan::sizes(std::size_t fold) const {
  std::array<std::size_t, 3> out{0, 0, 0};
  for (const auto& [_, p] : folds.at(fold)) ++out[static_cast<std::size_t>(p)];
  return out;
}

SplitPlan plan_original(const Dataset& dataset) {
  SplitPlan plan;
  plan.dataset = dataset.name;
  plan.scheme = SplitScheme::original;
  plan.k = 1;
  std::vector<std::string> missing;
  FoldAssignment fold;
  for (const Instance& instance : dataset.instances) {
    if (!instance.split_hint) {
      missing.push_back(instance.id);
    } else {
      fold.emplace_back(instance.id, *instance.split_hint);
    }
  }
  if (!missing.empty()) {
    std::string message = "instances without split_hint:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) message += " " + missing[i];
    if (missing.size() > 20) message += " ... (" + std::to_string(missing.size()) + " total)";
    throw DataError(message);
  }
  std::sort(fold.begin(), fold.end());
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const auto& [_, p] : fold) ++counts[static_cast<std::size_t>(p)];
  double n = static_cast<double>(fold.size());
  if (n > 0) {
    plan.ratios = {counts[0] / n, counts[1] / n, counts[2] / n};
  }
  if (counts[1] == 0) plan.notes.push_back("original split has no dev partition");
  plan.folds.push_back(std::move(fold));
  return plan;
}

SplitPlan plan_random(const Dataset& dataset, const SplitOptions& options) {
  check_ratios(options.ratios);
  SplitPlan plan;
  plan.dataset = dataset.name;
  plan.scheme = SplitScheme::random_kfold;
  plan.ratios = options.ratios;
  plan.seed = options.seed;

  std::vector<std::string> ids = sorted_ids(dataset);
  const std::size_t n = ids.size();
  if (n < options.k || n == 0) {
    throw DataError("random split needs at least k=" + std::to_string(options.k) +
                    " instances, got " + std::to_string(n));
  }
  plan.k = effective_folds(n, options, plan.notes);
  Rng rng(options.seed);
  rng.shuffle(std::span(ids));

  const std::size_t k = plan.k;
  const std::size_t dev_len = round_size(static_cast<double>(n) * options.ratios.dev);
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t start = 0;
    std::size_t test_len = round_size(static_cast<double>(n) * options.ratios.test);
    if (k > 1) {
      start = f * n / k;
      std::size_t next = (f + 1) * n / k;
      // Contiguous blocks must tile the permutation whenever k * test >= 1.
      if (static_cast<double>(k) * options.ratios.test >= 1.0 - kEps) {
        test_len = std::max(test_len, next - start);
      }
    }
    test_len = std::min(test_len, n);
    std::size_t dev_here = std::min(dev_len, n - test_len);

    std::vector<Partition> parts(n, Partition::train);
    for (std::size_t i = 0; i < test_len; ++i) parts[(start + i) % n] = Partition::test;
    for (std::size_t i = 0; i < dev_here; ++i) parts[(start + test_len + i) % n] = Partition::dev;

    FoldAssignment fold;
    fold.reserve(n);
    for (std::size_t i = 0; i < n; ++i) fold.emplace_back(ids[i], parts[i]);
    std::sort(fold.begin(), fold.end());
    plan.folds.push_back(std::move(fold));
  }
  plan.notes.push_back("dev rotates with the fold: the block following each test block");
  return plan;
}

SplitPlan plan_lexical(const Dataset& dataset, const SplitKey& key, const SplitOptions& options) {
  check_ratios(options.ratios);
  SplitPlan plan;
  plan.dataset = dataset.name;
  plan.scheme = SplitScheme::lexical_kfold;
  plan.ratios = options.ratios;
  plan.key = key;
  plan.seed = options.seed;

  const std::size_t n = dataset.instances.size();
  if (n == 0) throw DataError("lexical split of an empty dataset");
  plan.k = effective_folds(n, options, plan.notes);
  const std::size_t k = plan.k;

  std::size_t fallbacks = 0;
  std::vector<KeyGroup> groups = group_by_key(dataset, key, fallbacks);
  if (fallbacks > 0) {
    plan.notes.push_back(std::to_string(fallbacks) + " instance(s) keyed on surface: key '" +
                         key.to_string() + "' undefined for them");
  }
  for (const KeyGroup& g : groups) {
    if (static_cast<double>(g.size()) > options.ratios.test * static_cast<double>(n) + kEps) {
      plan.warnings.push_back("key '" + g.key + "' covers " + std::to_string(g.size()) + " of " +
                              std::to_string(n) +
                              " instances, more than the test ratio; balance unattainable");
    }
  }

  Rng rng(options.seed);
  const double total_met = static_cast<double>(dataset.count(Label::metaphoric));
  const double global_share = total_met / static_cast<double>(n);

  std::vector<std::vector<std::size_t>> fold_test(k);
  std::vector<std::vector<std::size_t>> bucket_of_group;  // bucket -> groups

  if (k > 1) {
    if (std::abs(static_cast<double>(k) * options.ratios.test - 1.0) > 1e-6) {
      plan.notes.push_back("test partition is one of k key-group buckets (1/k of the data); "
                           "requested test ratio not used");
    }
    // Largest-deficit packing into k equal buckets. Ties go to the bucket
    // whose label share the group moves toward the global share, then to a
    // seeded bucket order.
    std::vector<std::size_t> tie_order(k);
    std::iota(tie_order.begin(), tie_order.end(), 0);
    rng.shuffle(std::span(tie_order));
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[tie_order[r]] = r;

    const double target = static_cast<double>(n) / static_cast<double>(k);
    std::vector<double> fill(k, 0.0);
    std::vector<double> met(k, 0.0);
    bucket_of_group.assign(k, {});
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const KeyGroup& g = groups[gi];
      double g_share = static_cast<double>(g.metaphoric) / static_cast<double>(g.size());
      auto strat_gain = [&](std::size_t b) {
        if (fill[b] == 0) return 0.0;
        double share = met[b] / fill[b];
        // Positive when adding the group pulls the bucket toward the global share.
        return (global_share - share) * (g_share - share);
      };
      std::size_t best = tie_order[0];
      for (std::size_t b = 0; b < k; ++b) {
        double d_b = target - fill[b];
        double d_best = target - fill[best];
        if (d_b > d_best + kEps) {
          best = b;
        } else if (std::abs(d_b - d_best) <= kEps) {
          double s_b = strat_gain(b);
          double s_best = strat_gain(best);
          if (s_b > s_best + kEps || (std::abs(s_b - s_best) <= kEps && rank[b] < rank[best])) {
            best = b;
          }
        }
      }
      fill[best] += static_cast<double>(g.size());
      met[best] += static_cast<double>(g.metaphoric);
      bucket_of_group[best].push_back(gi);
    }
    for (std::size_t f = 0; f < k; ++f) fold_test[f] = bucket_of_group[f];
  } else {
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    fold_test[0] = best_fit(groups, order, options.ratios.test * static_cast<double>(n));
  }

  const double dev_target = options.ratios.dev * static_cast<double>(n);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<bool> in_test(groups.size(), false);
    for (std::size_t gi : fold_test[f]) in_test[gi] = true;

    std::vector<std::size_t> candidates;
    if (k > 1) {
      // Dev draws from the buckets after the test bucket, so it rotates too.
      for (std::size_t step = 1; step < k; ++step) {
        for (std::size_t gi : bucket_of_group[(f + step) % k]) candidates.push_back(gi);
      }
    } else {
      std::vector<std::size_t> order(groups.size());
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span(order));
      for (std::size_t gi : order) {
        if (!in_test[gi]) candidates.push_back(gi);
      }
    }
    std::vector<std::size_t> dev = dev_target > 0 ? best_fit(groups, candidates, dev_target)
                                                  : std::vector<std::size_t>{};

    std::unordered_map<std::string, Partition> map;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (const auto& id : groups[gi].ids) map[id] = Partition::train;
    }
    for (std::size_t gi : dev) {
      for (const auto& id : groups[gi].ids) map[id] = Partition::dev;
    }
    for (std::size_t gi : fold_test[f]) {
      for (const auto& id : groups[gi].ids) map[id] = Partition::test;
    }
    plan.folds.push_back(sorted_assignment(std::move(map)));
  }
  plan.notes.push_back("dev rotates with the fold: drawn from the buckets after the test bucket");
  return plan;
}

ValidationReport verify(const SplitPlan& plan, const Dataset& dataset) {
  ValidationReport report;
  std::unordered_map<std::string, const Instance*> by_id;
  for (const Instance& instance : dataset.instances) by_id[instance.id] = &instance;
  const std::size_t n = dataset.instances.size();

  if (plan.folds.size() != plan.k) {
    report.push_back({"", "plan declares k=" + std::to_string(plan.k) + " but has " +
                              std::to_string(plan.folds.size()) + " folds"});
  }

  std::size_t largest_group = 1;
  std::unordered_map<std::string, std::string> key_of;
  if (plan.scheme == SplitScheme::lexical_kfold) {
    SplitKey key = plan.key.value_or(SplitKey::surface());
    std::unordered_map<std::string, std::size_t> group_size;
    for (const Instance& instance : dataset.instances) {
      std::string k = resolve_split_key(instance, key).value;
      largest_group = std::max(largest_group, ++group_size[k]);
      key_of[instance.id] = std::move(k);
    }
  }

  std::unordered_map<std::string, std::size_t> times_in_test;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const std::string fold_name = "fold " + std::to_string(f);
    std::unordered_map<std::string, std::size_t> seen;
    std::array<std::size_t, 3> sizes{0, 0, 0};
    std::map<std::string, std::set<Partition>> key_parts;
    for (const auto& [id, part] : plan.folds[f]) {
      if (!by_id.contains(id)) {
        report.push_back({id, "dangling id in " + fold_name});
        continue;
      }
      if (++seen[id] == 2) report.push_back({id, "assigned more than once in " + fold_name});
      ++sizes[static_cast<std::size_t>(part)];
      if (part == Partition::test) ++times_in_test[id];
      if (plan.scheme == SplitScheme::lexical_kfold) key_parts[key_of[id]].insert(part);
    }
    for (const Instance& instance : dataset.instances) {
      if (!seen.contains(instance.id)) {
        report.push_back({instance.id, "uncovered instance in " + fold_name});
      }
    }
    for (const auto& [key, parts] : key_parts) {
      if (parts.contains(Partition::test) && parts.size() > 1) {
        std::string other = parts.contains(Partition::train) ? "train" : "dev";
        report.push_back({"", "key '" + key + "' in " + fold_name + " appears in test and " +
                                  other});
      }
    }

    if (plan.scheme == SplitScheme::original || n == 0) continue;
    const double dn = static_cast<double>(n);
    double test_target = dn * plan.ratios.test;
    double tolerance = 2.0;
    if (plan.scheme == SplitScheme::lexical_kfold) {
      tolerance = static_cast<double>(largest_group);
      if (plan.k > 1) test_target = dn / static_cast<double>(plan.k);
    }
    const double dev_target = dn * plan.ratios.dev;
    const double train_target = dn - test_target - dev_target;
    const std::array<double, 3> targets{train_target, dev_target, test_target};
    for (std::size_t p = 0; p < 3; ++p) {
      double deviation = std::abs(static_cast<double>(sizes[p]) - targets[p]);
      if (deviation > tolerance + kEps) {
        std::ostringstream msg;
        msg << to_string(static_cast<Partition>(p)) << " size " << sizes[p] << " in " << fold_name
            << " is " << deviation << " away from its target " << targets[p]
            << " (tolerance " << tolerance << ")";
        report.push_back({"", msg.str()});
      }
    }
  }

  if (plan.scheme != SplitScheme::original && plan.k > 1 &&
      static_cast<double>(plan.k) * plan.ratios.test >= 1.0 - kEps) {
    for (const Instance& instance : dataset.instances) {
      if (!times_in_test.contains(instance.id)) {
        report.push_back({instance.id, "never in test across folds"});
      }
    }
  }
  return report;
}

Json to_json(const SplitPlan& plan) {
  Json out;
  out["dataset"] = plan.dataset;
  out["scheme"] = to_string(plan.scheme);
  out["k"] = plan.k;
  out["ratios"] = {{"train", plan.ratios.train}, {"dev", plan.ratios.dev},
                   {"test", plan.ratios.test}};
  out["key"] = plan.key ? Json(plan.key->to_string()) : Json(nullptr);
  out["seed"] = plan.seed;
  out["notes"] = plan.notes;
  out["warnings"] = plan.warnings;
  Json folds = Json::array();
  for (const FoldAssignment& fold : plan.folds) {
    Json pairs = Json::array();
    for (const auto& [id, p] : fold) pairs.push_back(Json::array({id, to_string(p)}));
    folds.push_back(std::move(pairs));
  }
  out["assignment"] = std::move(folds);
  return out;
}

SplitPlan plan_from_json(const Json& object) {
  try {
    SplitPlan plan;
    plan.dataset = object.at("dataset").get<std::string>();
    try {
      plan.scheme = parse_split_scheme(object.at("scheme").get<std::string>());
      if (const Json& key = object.at("key"); !key.is_null()) {
        plan.key = SplitKey::parse(key.get<std::string>());
      }
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
    plan.k = object.at("k").get<std::size_t>();
    const Json& r = object.at("ratios");
    plan.ratios = {r.at("train").get<double>(), r.at("dev").get<double>(),
                   r.at("test").get<double>()};
    plan.seed = object.at("seed").get<std::uint64_t>();
    plan.notes = object.value("notes", std::vector<std::string>{});
    plan.warnings = object.value("warnings", std::vector<std::string>{});
    for (const Json& fold : object.at("assignment")) {
      FoldAssignment pairs;
      for (const Json& pair : fold) {
        pairs.emplace_back(pair.at(0).get<std::string>(),
                           parse_partition(pair.at(1).get<std::string>()));
      }
      plan.folds.push_back(std::move(pairs));
    }
    return plan;
  } catch (const Json::exception& e) {
    throw DataError(std::string("split plan: ") + e.what());
  }
}

SplitPlan read_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return plan_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_plan(const std::filesystem::path& path, const SplitPlan& plan) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(plan).dump(1) << '\n';
}

}  // namespace figbias
