#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "figbias/corpus_model.hpp"
#include "figbias/vuac_sampler.hpp"

namespace fbtest {

using figbias::Dataset;
using figbias::Instance;
using figbias::Label;
using figbias::Span;

inline std::vector<std::string> words(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline Instance make_instance(std::string id, std::string_view text, std::vector<Span> spans,
                              Label label, std::string dataset = "fixture") {
  Instance instance;
  instance.id = std::move(id);
  instance.dataset = std::move(dataset);
  instance.tokens = words(text);
  instance.spans = std::move(spans);
  instance.label = label;
  return instance;
}

// The running example sentence.
inline Instance dark_age() {
  return make_instance("ex-1", "The latest developments move us closer to a dark age .", {{8, 9}},
                       Label::metaphoric);
}

inline std::string padded(std::string_view prefix, std::size_t i, int width = 4) {
  std::string digits = std::to_string(i);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return std::string(prefix) + digits;
}

// Random dataset whose PME is one of `keys` words; group sizes are skewed.
inline Dataset keyed_dataset(std::size_t n, std::size_t keys, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset d;
  d.name = "keyed";
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(gen);
    const auto key = static_cast<std::size_t>(u * u * static_cast<double>(keys)) % keys;
    const std::size_t len = 3 + gen() % 6;
    const std::size_t pos = gen() % len;
    std::vector<std::string> tokens;
    for (std::size_t t = 0; t < len; ++t) {
      tokens.push_back(t == pos ? "key" + std::to_string(key) : "w" + std::to_string(gen() % 50));
    }
    Instance instance;
    instance.id = padded("r", i, 5);
    instance.dataset = "keyed";
    instance.tokens = std::move(tokens);
    instance.spans = {{pos, pos + 1}};
    instance.label = gen() % 3 == 0 ? Label::literal : Label::metaphoric;
    d.instances.push_back(std::move(instance));
  }
  return d;
}

// 50 expressions with a fixed label each, 40 instances per expression,
// contexts from a 200-word vocabulary. With `planted_cue`, the expression
// span also covers a cue token that agrees with the label 90% of the time.
inline Dataset memorization_dataset(std::uint64_t seed, bool planted_cue) {
  std::mt19937_64 gen(seed);
  constexpr std::size_t kExpressions = 50;
  constexpr std::size_t kPerExpression = 40;
  std::vector<Label> label_of(kExpressions);
  for (std::size_t e = 0; e < kExpressions; ++e) {
    label_of[e] = e < kExpressions / 2 ? Label::metaphoric : Label::literal;
  }
  std::shuffle(label_of.begin(), label_of.end(), gen);

  Dataset d;
  d.name = planted_cue ? "memorization_cue" : "memorization";
  std::size_t next = 0;
  for (std::size_t e = 0; e < kExpressions; ++e) {
    for (std::size_t j = 0; j < kPerExpression; ++j) {
      const std::size_t len = 8 + gen() % 8;
      const std::size_t pos = gen() % (len - 1);
      std::vector<std::string> tokens;
      for (std::size_t t = 0; t < len; ++t) tokens.push_back(padded("v", gen() % 200, 3));
      Span span{pos, pos + 1};
      tokens[pos] = padded("pme", e, 2);
      if (planted_cue) {
        const bool agrees = gen() % 10 != 0;
        const bool met = (label_of[e] == Label::metaphoric) == agrees;
        tokens[pos + 1] = met ? "cuem" : "cuel";
        span.end = pos + 2;
      }
      Instance instance;
      instance.id = padded("m", next++, 5);
      instance.dataset = d.name;
      instance.tokens = std::move(tokens);
      instance.spans = {span};
      instance.label = label_of[e];
      d.instances.push_back(std::move(instance));
    }
  }
  return d;
}

// Synthetic token corpus with planted surface, lemma and PoS matches.
//
// Expression i (i < 12) has length 1 + i % 3 (1 from i = 10 on), surface tokens "e<i>t<j>",
// lemmas "e<i>l<j>" and a fixed tag sequence. Inflected variants "e<i>t<j>s"
// share the lemma. Filler tokens are "f<n>" with random tags.
inline figbias::TokenCorpus planted_corpus(std::uint64_t seed, std::size_t sentences = 500) {
  std::mt19937_64 gen(seed);
  const std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "DET", "ADP", "ADV"};
  constexpr std::size_t kExpressions = 12;
  figbias::TokenCorpus corpus;
  for (std::size_t s = 0; s < sentences; ++s) {
    figbias::CorpusSentence sentence;
    sentence.doc = "d" + std::to_string(s / 50);
    sentence.sent = s % 50;
    const std::size_t len = 6 + gen() % 10;
    for (std::size_t t = 0; t < len; ++t) {
      const std::string filler = "f" + std::to_string(gen() % 300);
      sentence.tokens.push_back(filler);
      sentence.lemmas.push_back(filler);
      sentence.pos.push_back(tags[gen() % tags.size()]);
      sentence.met.push_back(false);
    }
    // Most sentences carry one expression: metaphoric, literal surface,
    // literal inflected (lemma match) or absent.
    const std::size_t roll = gen() % 10;
    if (roll < 9) {
      const std::size_t e = gen() % kExpressions;
      const std::size_t elen = e >= 10 ? 1 : 1 + e % 3;
      if (elen <= len) {
        const std::size_t at = gen() % (len - elen + 1);
        // Expressions 8..11 have no literal surface twins; 10, 11 no lemma twins either.
        std::size_t kind = roll < 3 ? 0 : roll < 6 ? 1 : 2;  // 0 met, 1 surface, 2 inflected
        if (e >= 8 && kind == 1) kind = 2;
        if (e >= 10 && kind == 2) kind = 0;
        for (std::size_t j = 0; j < elen; ++j) {
          const std::string base = "e" + std::to_string(e) + "t" + std::to_string(j);
          sentence.tokens[at + j] = kind == 2 ? base + "s" : base;
          sentence.lemmas[at + j] = "e" + std::to_string(e) + "l" + std::to_string(j);
          sentence.pos[at + j] = tags[(e + j) % tags.size()];
          sentence.met[at + j] = kind == 0;
        }
      }
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

}  // namespace fbtest
