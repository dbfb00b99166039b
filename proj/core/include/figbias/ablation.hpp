#pragma once

#include <string>
#include <string_view>

#include "figbias/corpus_model.hpp"

namespace figbias {

/// The three input configurations: full sentence with the expression marked,
/// the expression alone, and the sentence with the expression masked out.
enum class AblationMode { default_input, only_pme, masked };

inline constexpr std::string_view kPmeOpen = "<PME>";
inline constexpr std::string_view kPmeClose = "</PME>";
inline constexpr std::string_view kMaskToken = "<masked>";

std::string_view to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view text);  // throws ConfigError

struct AblatedExample {
  std::string instance_id;
  AblationMode mode = AblationMode::default_input;
  std::string text;
  Label label = Label::literal;
};

/// Renders `instance` under `mode`. Tokens are joined with single spaces.
///
///  - default_input: the merged span is wrapped as `<PME>first ... last</PME>`;
///  - only_pme: the tokens of the merged span;
///  - masked: each span token becomes one `<masked>`; tokens between the
///    spans of a discontiguous expression are kept.
///
/// Throws DataError if any token already contains a reserved marker.
AblatedExample ablate(const Instance& instance, AblationMode mode);

/// The instance as a classifier sees it under `mode`: unchanged for
/// default_input, cut down to the merged span for only_pme, and with span
/// tokens (and their lemmas and tags) replaced by `<masked>` for masked.
Instance visible_instance(const Instance& instance, AblationMode mode);

Json to_json(const AblatedExample& example);
AblatedExample ablated_from_json(const Json& object);  // throws DataError

}  // namespace figbias
