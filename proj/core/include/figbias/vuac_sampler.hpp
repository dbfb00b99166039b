#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "figbias/corpus_model.hpp"

namespace figbias {

/// One sentence of a token-level metaphor-annotated corpus.
struct CorpusSentence {
  std::string doc;
  std::size_t sent = 0;
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::vector<std::string> pos;
  std::vector<bool> met;
};

struct TokenCorpus {
  std::vector<CorpusSentence> sentences;
};

/// Parallel-array length checks.
ValidationReport validate(const TokenCorpus& corpus);

/// JSONL, one sentence per line:
/// {"doc":..., "sent":3, "tokens":[...], "lemmas":[...], "pos":[...], "met":[true,false,...]}
TokenCorpus read_token_corpus(std::istream& in);
TokenCorpus read_token_corpus(const std::filesystem::path& path);
Json to_json(const CorpusSentence& sentence);

enum class Granularity { token, span };

Granularity parse_granularity(std::string_view text);  // throws ConfigError
std::string_view to_string(Granularity granularity);

struct SamplerConfig {
  // Literal instances wanted per metaphoric instance (1.0 = balanced).
  double ratio = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_literals_per_expression = std::numeric_limits<std::size_t>::max();
  Granularity granularity = Granularity::span;
};

/// One metaphoric instance per maximal run of flagged tokens (span
/// granularity) or per flagged token (token granularity), with the whole
/// sentence as context.
std::vector<Instance> extract_metaphoric(const TokenCorpus& corpus, Granularity granularity);

/// Literal candidates are matched in strict order: identical surface sequence,
/// then identical lemma sequence, then identical PoS sequence.
enum class MatchTier { surface = 1, lemma = 2, pos = 3 };

std::string_view to_string(MatchTier tier);

struct TierDraw {
  std::string instance_id;
  std::string expression;
  MatchTier tier = MatchTier::surface;
};

struct ExpressionSummary {
  std::string expression;
  std::size_t metaphoric = 0;
  std::size_t quota = 0;
  std::array<std::size_t, 3> drawn{0, 0, 0};  // by tier
  std::size_t shortfall = 0;
};

struct SamplingLog {
  std::vector<TierDraw> draws;
  std::vector<ExpressionSummary> expressions;

  std::array<std::size_t, 3> tier_totals() const;
  std::size_t total_shortfall() const;
};

struct LiteralSample {
  std::vector<Instance> literals;
  SamplingLog log;
};

/// Draws literal occurrences for every distinct metaphoric expression.
///
/// Expressions are visited in a seeded shuffle. Each gets a quota of
/// ceil(metaphoric count * ratio), capped by max_literals_per_expression.
/// Candidates are windows of the expression's length containing no flagged
/// token; each occurrence is emitted at most once overall, and a lower tier is
/// only consulted once the higher tiers are exhausted. Shortfalls are logged.
LiteralSample sample_literals(const TokenCorpus& corpus, std::span<const Instance> metaphoric,
                              const SamplerConfig& config);

/// Metaphoric then literal instances, with tier statistics and the achieved
/// metaphoric share recorded in the provenance.
Dataset assemble(std::span<const Instance> metaphoric, const LiteralSample& literal,
                 const SamplerConfig& config);

Json to_json(const SamplingLog& log, const SamplerConfig& config);

}  // namespace figbias
