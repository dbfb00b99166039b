#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "figbias/corpus_model.hpp"
#include "figbias/splitting.hpp"
#include "figbias/vuac_sampler.hpp"

// Test-side reference implementations. They recompute results from first
// principles and share no code with the library beyond the data types.
namespace fbtest {

struct OracleMetrics {
  double accuracy, p_met, r_met, f1_met, p_lit, r_lit, f1_lit, macro;
};

// Textbook definitions over raw (gold, predicted) pairs; 0 on empty denominators.
inline OracleMetrics oracle_metrics(const std::vector<figbias::Label>& gold,
                                    const std::vector<figbias::Label>& pred) {
  using figbias::Label;
  auto count = [&](Label g, Label p) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) c += gold[i] == g && pred[i] == p;
    return c;
  };
  auto frac = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  auto f1 = [](double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  const std::size_t mm = count(Label::metaphoric, Label::metaphoric);
  const std::size_t ml = count(Label::metaphoric, Label::literal);
  const std::size_t lm = count(Label::literal, Label::metaphoric);
  const std::size_t ll = count(Label::literal, Label::literal);
  const double pm = frac(mm, mm + lm), rm = frac(mm, mm + ml);
  const double pl = frac(ll, ll + ml), rl = frac(ll, ll + lm);
  OracleMetrics o{};
  o.accuracy = 100.0 * frac(correct, gold.size());
  o.p_met = 100.0 * pm;
  o.r_met = 100.0 * rm;
  o.f1_met = 100.0 * f1(pm, rm);
  o.p_lit = 100.0 * pl;
  o.r_lit = 100.0 * rl;
  o.f1_lit = 100.0 * f1(pl, rl);
  o.macro = (o.f1_met + o.f1_lit) / 2.0;
  return o;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Sampler candidate: (sentence index, start).
using Window = std::pair<std::size_t, std::size_t>;

// Every unflagged window matching the expression, with the best tier it
// matches (1 surface, 2 lemma, 3 PoS).
inline std::map<Window, int> brute_force_candidates(const figbias::TokenCorpus& corpus,
                                                    const std::vector<std::string>& surface,
                                                    const std::vector<std::string>& lemmas,
                                                    const std::vector<std::string>& pos) {
  std::map<Window, int> out;
  const std::size_t len = surface.size();
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& sentence = corpus.sentences[s];
    for (std::size_t start = 0; start + len <= sentence.tokens.size(); ++start) {
      bool flagged = false, same_surface = true, same_lemma = true, same_pos = true;
      for (std::size_t j = 0; j < len; ++j) {
        flagged |= sentence.met[start + j];
        same_surface &= lower(sentence.tokens[start + j]) == lower(surface[j]);
        same_lemma &= lower(sentence.lemmas[start + j]) == lower(lemmas[j]);
        same_pos &= sentence.pos[start + j] == pos[j];
      }
      if (flagged) continue;
      if (same_surface) {
        out[{s, start}] = 1;
      } else if (same_lemma) {
        out[{s, start}] = 2;
      } else if (same_pos) {
        out[{s, start}] = 3;
      }
    }
  }
  return out;
}

// Keys (under the given extractor) that occur in the test partition and in
// another partition of the same fold.
template <typename KeyFn>
std::vector<std::string> leaked_keys(const figbias::FoldAssignment& fold,
                                     const figbias::Dataset& dataset, KeyFn key_of) {
  std::map<std::string, const figbias::Instance*> by_id;
  for (const auto& instance : dataset.instances) by_id[instance.id] = &instance;
  std::map<std::string, std::set<int>> parts;
  for (const auto& [id, part] : fold) parts[key_of(*by_id.at(id))].insert(static_cast<int>(part));
  std::vector<std::string> leaked;
  for (const auto& [key, p] : parts) {
    if (p.contains(static_cast<int>(figbias::Partition::test)) && p.size() > 1) leaked.push_back(key);
  }
  return leaked;
}

}  // namespace fbtest
