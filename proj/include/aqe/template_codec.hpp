#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/corpus.hpp"

namespace aqe {

/// Linearization families for the generative target.
///   Default     "#3 supports the topic : #1 Research | #2 Research"
///   Paraphrase  "#3 positive : #1 Research | #2 Research"
///   OrderCEtA   "#3, #1, Research, supports the topic [SEP] ..."
///   OrderECAt   "#1, #3, supports the topic, Research [SEP] ..."
///   Prompt      "Claim Index: #3, Stance: positive, Evidence Index: #1, Evidence Type: Research [SEP] ..."
enum class TemplateKind { Default, Prompt, OrderCEtA, OrderECAt, Paraphrase };

inline constexpr std::array<TemplateKind, 5> kTemplateKinds = {
    TemplateKind::Default, TemplateKind::Prompt, TemplateKind::OrderCEtA, TemplateKind::OrderECAt,
    TemplateKind::Paraphrase};

/// CLI spelling: default, prompt, order-ceta, order-ecat, paraphrase.
std::string_view template_kind_name(TemplateKind kind);
std::optional<TemplateKind> template_kind_from_name(std::string_view name);

/// True for kinds that group evidence under one claim header.
bool groups_by_claim(TemplateKind kind);

std::string_view stance_phrase(Stance stance, TemplateKind kind);

/// Canonical rendering: claims ascending, evidence ascending within a claim.
std::string serialize(const QuadSet& quads, TemplateKind kind);

struct ParseWarning {
  std::size_t segment = 0;  // index of the [SEP]-delimited segment
  std::string reason;
};

/// Result of parsing generated text. Every parsed unit (an evidence item, or a
/// whole claim group whose header is unusable) ends up in exactly one of
/// quads, duplicates or warnings, so units == quads.size() + duplicates + warnings.size().
struct ParseOutcome {
  QuadSet quads;
  std::vector<ParseWarning> warnings;
  std::size_t units = 0;
  std::size_t duplicates = 0;
};

/// Total parser: never throws on any input. Literal matching is case-insensitive.
/// Stance or type conflicts keep the first occurrence and warn on later ones.
ParseOutcome parse_quads(std::string_view text, TemplateKind kind, int n);

}  // namespace aqe
