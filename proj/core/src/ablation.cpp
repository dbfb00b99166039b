#include "figbias/ablation.hpp"

#include "figbias/errors.hpp"

namespace figbias {

namespace {

void check_markers(const Instance& instance) {
  for (const std::string& token : instance.tokens) {
    for (std::string_view marker : {kPmeOpen, kPmeClose, kMaskToken}) {
      if (token.find(marker) != std::string::npos) {
        throw DataError("instance " + instance.id + ": token '" + token +
                        "' collides with reserved marker " + std::string(marker));
      }
    }
  }
}

}  // namespace

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::default_input:
      return "default";
    case AblationMode::only_pme:
      return "only_pme";
    case AblationMode::masked:
      return "masked";
  }
  return "default";
}

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "default") return AblationMode::default_input;
  if (text == "only_pme") return AblationMode::only_pme;
  if (text == "masked") return AblationMode::masked;
  throw ConfigError("unknown mode '" + std::string(text) +
                    "' (expected default, only_pme or masked)");
}

AblatedExample ablate(const Instance& instance, AblationMode mode) {
  if (instance.spans.empty()) throw DataError("instance " + instance.id + " has no span");
  check_markers(instance);

  AblatedExample out{instance.id, mode, {}, instance.label};
  const Span merged = instance.merged_span();
  auto append = [&out](std::string_view piece) {
    if (!out.text.empty()) out.text += ' ';
    out.text += piece;
  };

  switch (mode) {
    case AblationMode::default_input:
      for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
        std::string token = instance.tokens[i];
        if (i == merged.start) token.insert(0, kPmeOpen);
        if (i + 1 == merged.end) token += kPmeClose;
        append(token);
      }
      break;
    case AblationMode::only_pme:
      for (std::size_t i = merged.start; i < merged.end; ++i) append(instance.tokens[i]);
      break;
    case AblationMode::masked:
      for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
        append(instance.in_span(i) ? kMaskToken : std::string_view(instance.tokens[i]));
      }
      break;
  }
  return out;
}

Instance visible_instance(const Instance& instance, AblationMode mode) {
  switch (mode) {
    case AblationMode::default_input:
      return instance;
    case AblationMode::only_pme: {
      const Span merged = instance.merged_span();
      Instance out = instance;
      auto cut = [&](const std::vector<std::string>& v) {
        return std::vector<std::string>(v.begin() + static_cast<std::ptrdiff_t>(merged.start),
                                        v.begin() + static_cast<std::ptrdiff_t>(merged.end));
      };
      out.tokens = cut(instance.tokens);
      if (instance.lemmas) out.lemmas = cut(*instance.lemmas);
      if (instance.pos) out.pos = cut(*instance.pos);
      out.spans = {{0, merged.size()}};
      out.original_spans.reset();
      return out;
    }
    case AblationMode::masked: {
      Instance out = instance;
      for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        if (!instance.in_span(i)) continue;
        out.tokens[i] = kMaskToken;
        if (out.lemmas) (*out.lemmas)[i] = kMaskToken;
        if (out.pos) (*out.pos)[i] = kMaskToken;
      }
      return out;
    }
  }
  return instance;
}

Json to_json(const AblatedExample& example) {
  Json out;
  out["instance_id"] = example.instance_id;
  out["mode"] = to_string(example.mode);
  out["text"] = example.text;
  out["label"] = to_string(example.label);
  return out;
}

AblatedExample ablated_from_json(const Json& object) {
  try {
    AblatedExample out;
    out.instance_id = object.at("instance_id").get<std::string>();
    try {
      out.mode = parse_ablation_mode(object.at("mode").get<std::string>());
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
    out.text = object.at("text").get<std::string>();
    out.label = parse_label(object.at("label").get<std::string>());
    return out;
  } catch (const Json::exception& e) {
    throw DataError(std::string("ablated example: ") + e.what());
  }
}

}  // namespace figbias
