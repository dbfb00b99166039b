#include "figbias/vuac_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "figbias/errors.hpp"
#include "figbias/rng.hpp"
#include "figbias/text.hpp"

namespace figbias {

ValidationReport validate(const TokenCorpus& corpus) {
  ValidationReport report;
  for (const CorpusSentence& s : corpus.sentences) {
    const std::string id = s.doc + "/" + std::to_string(s.sent);
    const std::size_t n = s.tokens.size();
    if (s.lemmas.size() != n) report.push_back({id, "lemma length mismatch"});
    if (s.pos.size() != n) report.push_back({id, "pos length mismatch"});
    if (s.met.size() != n) report.push_back({id, "met length mismatch"});
  }
  return report;
}

TokenCorpus read_token_corpus(std::istream& in) {
  TokenCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      CorpusSentence s;
      s.doc = j.at("doc").is_string() ? j.at("doc").get<std::string>() : j.at("doc").dump();
      s.sent = j.at("sent").get<std::size_t>();
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      s.lemmas = j.at("lemmas").get<std::vector<std::string>>();
      s.pos = j.at("pos").get<std::vector<std::string>>();
      for (const Json& flag : j.at("met")) s.met.push_back(flag.get<bool>());
      for (auto& t : s.tokens) t = nfc(t);
      for (auto& t : s.lemmas) t = nfc(t);
      corpus.sentences.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw DataError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  ValidationReport report = validate(corpus);
  if (!report.empty()) {
    throw DataError("corpus sentence " + report.front().id + ": " + report.front().message);
  }
  return corpus;
}

TokenCorpus read_token_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_token_corpus(in);
}

Json to_json(const CorpusSentence& s) {
  Json out;
  out["doc"] = s.doc;
  out["sent"] = s.sent;
  out["tokens"] = s.tokens;
  out["lemmas"] = s.lemmas;
  out["pos"] = s.pos;
  Json met = Json::array();
  for (bool b : s.met) met.push_back(b);
  out["met"] = std::move(met);
  return out;
}

Granularity parse_granularity(std::string_view text) {
  if (text == "span") return Granularity::span;
  if (text == "token") return Granularity::token;
  throw ConfigError("unknown granularity '" + std::string(text) + "' (expected token or span)");
}

std::string_view to_string(Granularity granularity) {
  return granularity == Granularity::span ? "span" : "token";
}

std::string_view to_string(MatchTier tier) {
  switch (tier) {
    case MatchTier::surface:
      return "surface";
    case MatchTier::lemma:
      return "lemma";
    case MatchTier::pos:
      return "pos";
  }
  return "surface";
}

namespace {

constexpr const char* kDatasetTag = "vuac_bo";

Instance sentence_instance(const CorpusSentence& s, Span span, Label label, std::string id) {
  Instance instance;
  instance.id = std::move(id);
  instance.dataset = kDatasetTag;
  instance.tokens = s.tokens;
  instance.lemmas = s.lemmas;
  instance.pos = s.pos;
  instance.spans = {span};
  instance.label = label;
  return instance;
}

std::string occurrence_id(const char* kind, const CorpusSentence& s, Span span) {
  return std::string("vuac-") + kind + "-" + s.doc + "-" + std::to_string(s.sent) + "-" +
         std::to_string(span.start) + "-" + std::to_string(span.size());
}

struct Occurrence {
  std::size_t sentence = 0;
  std::size_t start = 0;

  auto operator<=>(const Occurrence&) const = default;
};

constexpr char kSep = '\x1f';

std::string seq_key(const std::vector<std::string>& values, std::size_t start, std::size_t len,
                    bool fold) {
  std::string key;
  for (std::size_t i = start; i < start + len; ++i) {
    key += fold ? fold_case(values[i]) : values[i];
    key += kSep;
  }
  return key;
}

// Windows sharing one key. They are shuffled on first use and handed out in
// that order; `next` only moves forward because skipped windows are consumed.
struct Bucket {
  std::vector<Occurrence> windows;
  std::size_t next = 0;
  bool shuffled = false;
};

// Unflagged windows of one length, indexed by surface, lemma and PoS sequence.
struct WindowIndex {
  std::unordered_map<std::string, Bucket> by_tier[3];
};

WindowIndex build_index(const TokenCorpus& corpus, std::size_t len) {
  WindowIndex index;
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const CorpusSentence& s = corpus.sentences[si];
    const std::size_t n = s.tokens.size();
    if (len == 0 || len > n) continue;
    // flagged_before[i]: number of flagged tokens in [0, i).
    std::vector<std::size_t> flagged_before(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) flagged_before[i + 1] = flagged_before[i] + s.met[i];
    for (std::size_t start = 0; start + len <= n; ++start) {
      if (flagged_before[start + len] != flagged_before[start]) continue;
      const Occurrence occ{si, start};
      index.by_tier[0][seq_key(s.tokens, start, len, true)].windows.push_back(occ);
      index.by_tier[1][seq_key(s.lemmas, start, len, true)].windows.push_back(occ);
      index.by_tier[2][seq_key(s.pos, start, len, false)].windows.push_back(occ);
    }
  }
  return index;
}

struct Expression {
  std::string surface;  // display form, space-joined and case-folded
  std::size_t length = 0;
  std::array<std::optional<std::string>, 3> keys;
  std::size_t metaphoric = 0;
};

}  // namespace

std::vector<Instance> extract_metaphoric(const TokenCorpus& corpus, Granularity granularity) {
  std::vector<Instance> out;
  for (const CorpusSentence& s : corpus.sentences) {
    const std::size_t n = s.tokens.size();
    std::size_t i = 0;
    while (i < n) {
      if (!s.met[i]) {
        ++i;
        continue;
      }
      std::size_t end = i + 1;
      if (granularity == Granularity::span) {
        while (end < n && s.met[end]) ++end;
      }
      const Span span{i, end};
      out.push_back(
          sentence_instance(s, span, Label::metaphoric, occurrence_id("met", s, span)));
      i = end;
    }
  }
  return out;
}

std::array<std::size_t, 3> SamplingLog::tier_totals() const {
  std::array<std::size_t, 3> totals{0, 0, 0};
  for (const TierDraw& d : draws) ++totals[static_cast<std::size_t>(d.tier) - 1];
  return totals;
}

std::size_t SamplingLog::total_shortfall() const {
  std::size_t total = 0;
  for (const auto& e : expressions) total += e.shortfall;
  return total;
}

LiteralSample sample_literals(const TokenCorpus& corpus, std::span<const Instance> metaphoric,
                              const SamplerConfig& config) {
  if (!(config.ratio > 0)) throw ConfigError("sampler ratio must be positive");
  if (config.max_literals_per_expression == 0) {
    throw ConfigError("max literals per expression must be at least 1");
  }

  // Distinct expressions in first-seen order.
  std::vector<Expression> expressions;
  std::unordered_map<std::string, std::size_t> expression_of;
  for (const Instance& instance : metaphoric) {
    const std::vector<std::string> tokens = instance.span_tokens();
    if (tokens.empty()) continue;
    std::string surface_key;
    for (const auto& t : tokens) (surface_key += fold_case(t)) += kSep;
    auto [it, inserted] = expression_of.try_emplace(surface_key, expressions.size());
    if (inserted) {
      Expression e;
      e.surface = fold_case(join(tokens));
      e.length = tokens.size();
      e.keys[0] = surface_key;
      auto span_values = [&](const std::optional<std::vector<std::string>>& values,
                             bool fold) -> std::optional<std::string> {
        if (!values || values->size() != instance.tokens.size()) return std::nullopt;
        std::string key;
        for (const Span& s : instance.spans) {
          for (std::size_t i = s.start; i < s.end; ++i) {
            key += fold ? fold_case((*values)[i]) : (*values)[i];
            key += kSep;
          }
        }
        return key;
      };
      e.keys[1] = span_values(instance.lemmas, true);
      e.keys[2] = span_values(instance.pos, false);
      expressions.push_back(std::move(e));
    }
    ++expressions[it->second].metaphoric;
  }

  std::vector<std::size_t> order(expressions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);
  rng.shuffle(std::span(order));

  std::map<std::size_t, WindowIndex> indexes;
  std::set<std::pair<Occurrence, std::size_t>> consumed;  // (occurrence, length)

  LiteralSample sample;
  for (std::size_t ei : order) {
    const Expression& e = expressions[ei];
    auto idx_it = indexes.find(e.length);
    if (idx_it == indexes.end()) {
      idx_it = indexes.emplace(e.length, build_index(corpus, e.length)).first;
    }
    WindowIndex& index = idx_it->second;

    ExpressionSummary summary;
    summary.expression = e.surface;
    summary.metaphoric = e.metaphoric;
    const double wanted = std::ceil(static_cast<double>(e.metaphoric) * config.ratio - 1e-9);
    summary.quota = std::min(static_cast<std::size_t>(std::max(wanted, 0.0)),
                             config.max_literals_per_expression);

    // A lower tier is reached only when every higher-tier window is consumed,
    // so skipping consumed windows also skips the higher-tier matches.
    std::size_t remaining = summary.quota;
    for (std::size_t tier = 0; tier < 3 && remaining > 0; ++tier) {
      if (!e.keys[tier]) continue;
      auto it = index.by_tier[tier].find(*e.keys[tier]);
      if (it == index.by_tier[tier].end()) continue;
      Bucket& bucket = it->second;
      if (!bucket.shuffled) {
        rng.shuffle(std::span(bucket.windows));
        bucket.shuffled = true;
      }
      std::size_t take = 0;
      while (take < remaining && bucket.next < bucket.windows.size()) {
        const Occurrence occ = bucket.windows[bucket.next++];
        if (!consumed.insert({occ, e.length}).second) continue;
        ++take;
        const CorpusSentence& s = corpus.sentences[occ.sentence];
        const Span span{occ.start, occ.start + e.length};
        Instance literal =
            sentence_instance(s, span, Label::literal, occurrence_id("lit", s, span));
        sample.log.draws.push_back({literal.id, e.surface, static_cast<MatchTier>(tier + 1)});
        sample.literals.push_back(std::move(literal));
      }
      summary.drawn[tier] = take;
      remaining -= take;
    }
    summary.shortfall = remaining;
    sample.log.expressions.push_back(std::move(summary));
  }
  return sample;
}

Dataset assemble(std::span<const Instance> metaphoric, const LiteralSample& literal,
                 const SamplerConfig& config) {
  Dataset dataset;
  dataset.name = kDatasetTag;
  dataset.instances.assign(metaphoric.begin(), metaphoric.end());
  dataset.instances.insert(dataset.instances.end(), literal.literals.begin(),
                           literal.literals.end());
  const auto tiers = literal.log.tier_totals();
  std::ostringstream p;
  p << "vuac sampler: seed=" << config.seed << " ratio=" << config.ratio
    << " granularity=" << to_string(config.granularity) << " metaphoric=" << metaphoric.size()
    << " literal=" << literal.literals.size() << " tier_surface=" << tiers[0]
    << " tier_lemma=" << tiers[1] << " tier_pos=" << tiers[2]
    << " shortfall=" << literal.log.total_shortfall()
    << " achieved_metaphoric_percent=" << dataset.metaphoric_percent();
  dataset.provenance = p.str();
  return dataset;
}

Json to_json(const SamplingLog& log, const SamplerConfig& config) {
  Json out;
  out["config"] = {{"ratio", config.ratio},
                   {"seed", config.seed},
                   {"granularity", to_string(config.granularity)},
                   {"max_literals_per_expression",
                    config.max_literals_per_expression == std::numeric_limits<std::size_t>::max()
                        ? Json(nullptr)
                        : Json(config.max_literals_per_expression)}};
  const auto totals = log.tier_totals();
  out["totals"] = {{"surface", totals[0]},
                   {"lemma", totals[1]},
                   {"pos", totals[2]},
                   {"shortfall", log.total_shortfall()}};
  Json expressions = Json::array();
  for (const ExpressionSummary& e : log.expressions) {
    expressions.push_back({{"expression", e.expression},
                           {"metaphoric", e.metaphoric},
                           {"quota", e.quota},
                           {"surface", e.drawn[0]},
                           {"lemma", e.drawn[1]},
                           {"pos", e.drawn[2]},
                           {"shortfall", e.shortfall}});
  }
  out["expressions"] = std::move(expressions);
  Json draws = Json::array();
  for (const TierDraw& d : log.draws) {
    draws.push_back({{"id", d.instance_id}, {"expression", d.expression}, {"tier", to_string(d.tier)}});
  }
  out["draws"] = std::move(draws);
  return out;
}

}  // namespace figbias
