#include "aqe/template_codec.hpp"

#include <cctype>
#include <map>
#include <set>

namespace aqe {

namespace {

constexpr std::string_view kSep = "[sep]";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Lowercases and collapses whitespace runs to one space.
std::string normalize(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) words.push_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::string_view> split_on(std::string_view s, char delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::vector<std::string_view> split_segments(std::string_view text) {
  std::vector<std::string_view> segments;
  if (trim(text).empty()) return segments;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i + kSep.size() <= text.size()) {
    bool match = true;
    for (std::size_t k = 0; k < kSep.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(text[i + k])) != kSep[k]) {
        match = false;
        break;
      }
    }
    if (match) {
      segments.push_back(text.substr(start, i - start));
      i += kSep.size();
      start = i;
    } else {
      ++i;
    }
  }
  segments.push_back(text.substr(start));
  return segments;
}

enum class IdError { None, NotNumeric, OutOfRange };

IdError parse_id(std::string_view token, int n, int& out) {
  token = trim(token);
  if (token.size() < 2 || token.front() != '#' || token.size() > 10) return IdError::NotNumeric;
  int value = 0;
  for (char c : token.substr(1)) {
    if (c < '0' || c > '9') return IdError::NotNumeric;
    value = value * 10 + (c - '0');
  }
  if (value < 1 || value > n) return IdError::OutOfRange;
  out = value;
  return IdError::None;
}

std::optional<Stance> stance_from_phrase(std::string_view phrase, TemplateKind kind) {
  const std::string norm = normalize(phrase);
  for (Stance s : kStances) {
    if (norm == stance_phrase(s, kind)) return s;
  }
  return std::nullopt;
}

std::optional<EvidenceType> type_from_token(std::string_view token) {
  const std::string norm = normalize(token);
  if (norm.find(' ') != std::string::npos) return std::nullopt;
  return type_from_name(norm);
}

std::string id_text(int id) { return "#" + std::to_string(id); }

class Collector {
 public:
  Collector(ParseOutcome& out) : out_(out) {}

  void warn(std::size_t segment, std::string reason) {
    ++out_.units;
    out_.warnings.push_back({segment, std::move(reason)});
  }

  void add(std::size_t segment, const Quadruplet& q) {
    ++out_.units;
    if (out_.quads.count(q)) {
      ++out_.duplicates;
      return;
    }
    auto stance = stances_.find(q.claim);
    if (stance != stances_.end() && stance->second != q.stance) {
      out_.warnings.push_back({segment, "conflicting stance for claim " + id_text(q.claim)});
      return;
    }
    if (pairs_.count({q.claim, q.evidence})) {
      out_.warnings.push_back({segment, "conflicting type for claim-evidence pair"});
      return;
    }
    stances_.emplace(q.claim, q.stance);
    pairs_.insert({q.claim, q.evidence});
    out_.quads.insert(q);
  }

 private:
  ParseOutcome& out_;
  std::map<int, Stance> stances_;
  std::set<std::pair<int, int>> pairs_;
};

std::string id_reason(IdError err, std::string_view role) {
  return std::string(err == IdError::OutOfRange ? "" : "non-numeric ") + std::string(role) +
         (err == IdError::OutOfRange ? " id out of range" : " id");
}

void parse_grouped_segment(std::string_view segment, std::size_t index, TemplateKind kind, int n,
                           Collector& collect) {
  const std::size_t colon = segment.find(':');
  if (colon == std::string_view::npos) {
    collect.warn(index, "missing ':' after claim header");
    return;
  }
  const std::string_view header = trim(segment.substr(0, colon));
  const std::vector<std::string_view> header_words = split_words(header);
  if (header_words.empty()) {
    collect.warn(index, "missing claim header");
    return;
  }
  int claim = 0;
  if (IdError err = parse_id(header_words[0], n, claim); err != IdError::None) {
    collect.warn(index, id_reason(err, "claim"));
    return;
  }
  const std::string_view phrase = trim(header.substr(header_words[0].size()));
  const std::optional<Stance> stance = stance_from_phrase(phrase, kind);
  if (!stance) {
    collect.warn(index, "unknown stance phrase");
    return;
  }
  for (std::string_view item : split_on(segment.substr(colon + 1), '|')) {
    const std::vector<std::string_view> words = split_words(item);
    if (words.size() != 2) {
      collect.warn(index, "malformed evidence item");
      continue;
    }
    int evidence = 0;
    if (IdError err = parse_id(words[0], n, evidence); err != IdError::None) {
      collect.warn(index, id_reason(err, "evidence"));
      continue;
    }
    const std::optional<EvidenceType> type = type_from_token(words[1]);
    if (!type) {
      collect.warn(index, "unknown evidence type");
      continue;
    }
    if (evidence == claim) {
      collect.warn(index, "claim and evidence are the same sentence");
      continue;
    }
    collect.add(index, {claim, evidence, *stance, *type});
  }
}

/// Strips "Label:" from a prompt field; nullopt if the label does not match.
std::optional<std::string_view> prompt_value(std::string_view field, std::string_view label) {
  const std::size_t colon = field.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  if (normalize(field.substr(0, colon)) != label) return std::nullopt;
  return trim(field.substr(colon + 1));
}

void parse_flat_segment(std::string_view segment, std::size_t index, TemplateKind kind, int n,
                        Collector& collect) {
  std::vector<std::string_view> fields = split_on(segment, ',');
  if (fields.size() != 4) {
    collect.warn(index, "expected 4 comma-separated fields");
    return;
  }
  std::string_view claim_f, evidence_f, stance_f, type_f;
  switch (kind) {
    case TemplateKind::OrderCEtA:
      claim_f = fields[0], evidence_f = fields[1], type_f = fields[2], stance_f = fields[3];
      break;
    case TemplateKind::OrderECAt:
      evidence_f = fields[0], claim_f = fields[1], stance_f = fields[2], type_f = fields[3];
      break;
    default: {
      const std::array<std::string_view, 4> labels = {"claim index", "stance", "evidence index",
                                                      "evidence type"};
      std::array<std::string_view, 4> values;
      for (std::size_t k = 0; k < 4; ++k) {
        auto value = prompt_value(fields[k], labels[k]);
        if (!value) {
          collect.warn(index, "missing prompt label \"" + std::string(labels[k]) + "\"");
          return;
        }
        values[k] = *value;
      }
      claim_f = values[0], stance_f = values[1], evidence_f = values[2], type_f = values[3];
      break;
    }
  }
  int claim = 0;
  int evidence = 0;
  if (IdError err = parse_id(claim_f, n, claim); err != IdError::None) {
    collect.warn(index, id_reason(err, "claim"));
    return;
  }
  if (IdError err = parse_id(evidence_f, n, evidence); err != IdError::None) {
    collect.warn(index, id_reason(err, "evidence"));
    return;
  }
  const std::optional<Stance> stance = stance_from_phrase(stance_f, kind);
  if (!stance) {
    collect.warn(index, "unknown stance phrase");
    return;
  }
  const std::optional<EvidenceType> type = type_from_token(type_f);
  if (!type) {
    collect.warn(index, "unknown evidence type");
    return;
  }
  if (evidence == claim) {
    collect.warn(index, "claim and evidence are the same sentence");
    return;
  }
  collect.add(index, {claim, evidence, *stance, *type});
}

}  // namespace

std::string_view template_kind_name(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::Default: return "default";
    case TemplateKind::Prompt: return "prompt";
    case TemplateKind::OrderCEtA: return "order-ceta";
    case TemplateKind::OrderECAt: return "order-ecat";
    case TemplateKind::Paraphrase: return "paraphrase";
  }
  return "default";
}

std::optional<TemplateKind> template_kind_from_name(std::string_view name) {
  for (TemplateKind k : kTemplateKinds) {
    if (template_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool groups_by_claim(TemplateKind kind) {
  return kind == TemplateKind::Default || kind == TemplateKind::Paraphrase;
}

std::string_view stance_phrase(Stance stance, TemplateKind kind) {
  const bool plain = kind == TemplateKind::Paraphrase || kind == TemplateKind::Prompt;
  if (stance == Stance::Support) return plain ? "positive" : "supports the topic";
  return plain ? "negative" : "is against the topic";
}

std::string serialize(const QuadSet& quads, TemplateKind kind) {
  std::string out;
  if (groups_by_claim(kind)) {
    int current = 0;
    for (const Quadruplet& q : quads) {
      if (q.claim != current) {
        if (current != 0) out += " [SEP] ";
        out += id_text(q.claim);
        out += ' ';
        out += stance_phrase(q.stance, kind);
        out += " : ";
        current = q.claim;
      } else {
        out += " | ";
      }
      out += id_text(q.evidence);
      out += ' ';
      out += display_name(q.type);
    }
    return out;
  }
  bool first = true;
  for (const Quadruplet& q : quads) {
    if (!first) out += " [SEP] ";
    first = false;
    const std::string claim = id_text(q.claim);
    const std::string evidence = id_text(q.evidence);
    const std::string_view phrase = stance_phrase(q.stance, kind);
    const std::string_view type = display_name(q.type);
    switch (kind) {
      case TemplateKind::OrderCEtA:
        out += claim + ", " + evidence + ", " + std::string(type) + ", " + std::string(phrase);
        break;
      case TemplateKind::OrderECAt:
        out += evidence + ", " + claim + ", " + std::string(phrase) + ", " + std::string(type);
        break;
      default:
        out += "Claim Index: " + claim + ", Stance: " + std::string(phrase) +
               ", Evidence Index: " + evidence + ", Evidence Type: " + std::string(type);
        break;
    }
  }
  return out;
}

ParseOutcome parse_quads(std::string_view text, TemplateKind kind, int n) {
  ParseOutcome outcome;
  Collector collect(outcome);
  const std::vector<std::string_view> segments = split_segments(text);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const std::string_view segment = trim(segments[s]);
    if (segment.empty()) {
      collect.warn(s, "empty segment");
      continue;
    }
    if (groups_by_claim(kind)) {
      parse_grouped_segment(segment, s, kind, n, collect);
    } else {
      parse_flat_segment(segment, s, kind, n, collect);
    }
  }
  return outcome;
}

}  // namespace aqe
