#include "aqe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "aqe/error.hpp"
#include "aqe/rng.hpp"

namespace aqe {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Sentence make_sentence(int id, std::string_view text) {
  Sentence s;
  s.id = id;
  s.text = std::string(text);
  s.tokens = tokenize(text);
  return s;
}

}  // namespace

std::string_view wire_name(Stance stance) {
  return stance == Stance::Support ? "support" : "against";
}

std::string_view wire_name(EvidenceType type) {
  switch (type) {
    case EvidenceType::Expert: return "expert";
    case EvidenceType::Research: return "research";
    case EvidenceType::Case: return "case";
    case EvidenceType::Explanation: return "explanation";
    case EvidenceType::Others: return "others";
  }
  return "others";
}

std::string_view display_name(EvidenceType type) {
  switch (type) {
    case EvidenceType::Expert: return "Expert";
    case EvidenceType::Research: return "Research";
    case EvidenceType::Case: return "Case";
    case EvidenceType::Explanation: return "Explanation";
    case EvidenceType::Others: return "Others";
  }
  return "Others";
}

std::optional<Stance> stance_from_name(std::string_view name) {
  const std::string lower = lowercase(name);
  for (Stance s : kStances) {
    if (lower == wire_name(s)) return s;
  }
  return std::nullopt;
}

std::optional<EvidenceType> type_from_name(std::string_view name) {
  const std::string lower = lowercase(name);
  for (EvidenceType t : kEvidenceTypes) {
    if (lower == wire_name(t)) return t;
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokens.push_back(lowercase(text.substr(i, j - i)));
    i = j;
  }
  return tokens;
}

void validate_quads(const QuadSet& quads, int n) {
  std::map<int, Stance> claim_stance;
  std::set<std::pair<int, int>> pairs;
  for (const Quadruplet& q : quads) {
    if (q.claim < 1 || q.claim > n) throw ValidationError("claim_id out of range");
    if (q.evidence < 1 || q.evidence > n) throw ValidationError("evidence_id out of range");
    if (q.claim == q.evidence) throw ValidationError("claim and evidence are the same sentence");
    auto [it, inserted] = claim_stance.emplace(q.claim, q.stance);
    if (!inserted && it->second != q.stance) {
      throw ValidationError("conflicting stances for claim " + std::to_string(q.claim));
    }
    if (!pairs.emplace(q.claim, q.evidence).second) {
      throw ValidationError("conflicting types for claim-evidence pair (" +
                            std::to_string(q.claim) + ", " + std::to_string(q.evidence) + ")");
    }
  }
}

void validate_document(const Document& doc) {
  if (doc.topic.id != 0) throw ValidationError("topic must have id 0");
  if (doc.topic.tokens.empty()) throw ValidationError("empty topic sentence");
  if (doc.body.empty()) throw ValidationError("document has no body sentences");
  for (std::size_t i = 0; i < doc.body.size(); ++i) {
    if (doc.body[i].id != static_cast<int>(i) + 1) {
      throw ValidationError("body sentence ids must be 1..n contiguous");
    }
    if (doc.body[i].tokens.empty()) {
      throw ValidationError("empty sentence " + std::to_string(i + 1));
    }
  }
  validate_quads(doc.gold, doc.n());
}

Document make_document(std::string doc_id, std::string_view topic,
                       const std::vector<std::string>& sentences,
                       const std::vector<Quadruplet>& quads, std::optional<int> paragraphs) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.topic = make_sentence(0, topic);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    doc.body.push_back(make_sentence(static_cast<int>(i) + 1, sentences[i]));
  }
  for (const Quadruplet& q : quads) {
    if (!doc.gold.insert(q).second) throw ValidationError("duplicate quadruplet");
  }
  doc.paragraphs = paragraphs;
  validate_document(doc);
  return doc;
}

Document document_from_json_line(std::string_view line) {
  using nlohmann::json;
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.what());
  }
  try {
    if (!record.is_object()) throw ValidationError("record is not a JSON object");
    for (const char* key : {"doc_id", "topic", "sentences", "quads"}) {
      if (!record.contains(key)) throw ValidationError(std::string("missing field \"") + key + "\"");
    }
    std::vector<std::string> sentences = record.at("sentences").get<std::vector<std::string>>();
    std::vector<Quadruplet> quads;
    for (const json& q : record.at("quads")) {
      Quadruplet quad;
      quad.claim = q.at("claim").get<int>();
      quad.evidence = q.at("evidence").get<int>();
      auto stance = stance_from_name(q.at("stance").get<std::string>());
      if (!stance) throw ValidationError("unknown stance \"" + q.at("stance").get<std::string>() + "\"");
      auto type = type_from_name(q.at("type").get<std::string>());
      if (!type) throw ValidationError("unknown evidence type \"" + q.at("type").get<std::string>() + "\"");
      quad.stance = *stance;
      quad.type = *type;
      quads.push_back(quad);
    }
    std::optional<int> paragraphs;
    if (record.contains("paragraphs")) paragraphs = record.at("paragraphs").get<int>();
    return make_document(record.at("doc_id").get<std::string>(),
                         record.at("topic").get<std::string>(), sentences, quads, paragraphs);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad field: ") + e.what());
  }
}

std::string document_to_json_line(const Document& doc) {
  using nlohmann::json;
  json record;
  record["doc_id"] = doc.doc_id;
  record["topic"] = doc.topic.text;
  json sentences = json::array();
  for (const Sentence& s : doc.body) sentences.push_back(s.text);
  record["sentences"] = std::move(sentences);
  json quads = json::array();
  for (const Quadruplet& q : doc.gold) {
    quads.push_back({{"claim", q.claim},
                     {"evidence", q.evidence},
                     {"stance", std::string(wire_name(q.stance))},
                     {"type", std::string(wire_name(q.type))}});
  }
  record["quads"] = std::move(quads);
  if (doc.paragraphs) record["paragraphs"] = *doc.paragraphs;
  return record.dump();
}

std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(document_from_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.detail());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
  for (const Document& doc : docs) out << document_to_json_line(doc) << '\n';
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path);
  write_corpus(out, docs);
}

CorpusSplits split_corpus(const std::vector<Document>& docs, std::array<double, 3> ratios,
                          std::uint64_t seed) {
  if (docs.empty()) throw Error("cannot split an empty corpus");
  for (double r : ratios) {
    if (!(r >= 0.0)) throw Error("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw Error("split ratios must sum to 1");
  }
  const std::size_t total = docs.size();
  auto portion = [total](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(total) + 1e-9));
  };
  const std::size_t n_dev = portion(ratios[1]);
  const std::size_t n_test = portion(ratios[2]);
  const std::size_t n_train = total - n_dev - n_test;

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<int> assignment(total, 0);
  for (std::size_t k = n_train; k < n_train + n_dev; ++k) assignment[order[k]] = 1;
  for (std::size_t k = n_train + n_dev; k < total; ++k) assignment[order[k]] = 2;

  CorpusSplits splits;
  for (std::size_t i = 0; i < total; ++i) {
    switch (assignment[i]) {
      case 0: splits.train.push_back(docs[i]); break;
      case 1: splits.dev.push_back(docs[i]); break;
      default: splits.test.push_back(docs[i]); break;
    }
  }
  return splits;
}

CorpusStats compute_stats(const std::vector<Document>& docs) {
  CorpusStats stats;
  std::set<std::string> topics;
  std::size_t paragraphs = 0;
  bool all_paragraphs = !docs.empty();
  for (const Document& doc : docs) {
    topics.insert(doc.topic.text);
    ++stats.n_documents;
    if (doc.paragraphs) {
      paragraphs += static_cast<std::size_t>(*doc.paragraphs);
    } else {
      all_paragraphs = false;
    }
    std::set<int> claims;
    std::set<int> evidence;
    for (const Quadruplet& q : doc.gold) {
      claims.insert(q.claim);
      evidence.insert(q.evidence);
    }
    stats.n_claims += claims.size();
    stats.n_evidence += evidence.size();
    stats.n_quadruplets += doc.gold.size();
  }
  stats.n_topics = topics.size();
  if (all_paragraphs) stats.n_paragraphs = paragraphs;
  return stats;
}

namespace {

// Cue lexicons for synthetic documents. Cues sit at fixed offsets at the start
// of each sentence so a single attention layer can pick them up.
constexpr std::array<std::string_view, 2> kClaimMarkers = {"clearly", "undeniably"};
constexpr std::array<std::string_view, 3> kSupportCues = {"beneficial", "helpful", "valuable"};
constexpr std::array<std::string_view, 3> kAgainstCues = {"harmful", "dangerous", "wasteful"};
constexpr std::array<std::array<std::string_view, 2>, 5> kTypeCues = {{
    {"professor", "official"},
    {"study", "survey"},
    {"incident", "example"},
    {"because", "therefore"},
    {"also", "meanwhile"},
}};
constexpr std::array<std::string_view, 6> kLinkKeys = {"economy", "health",  "safety",
                                                       "culture", "schools", "nature"};

}  // namespace

std::vector<Document> synthesize_corpus(const SynthConfig& config) {
  if (config.max_sentences < 2) throw Error("max_sentences must be at least 2");
  if (config.quads_per_doc < 1) throw Error("quads_per_doc must be at least 1");
  if (config.vocab_size < 1) throw Error("vocab_size must be at least 1");
  // Every quad needs its own evidence sentence and at least one claim must exist.
  if (config.quads_per_doc + 1 > config.max_sentences) {
    throw Error("infeasible synthetic config: quads_per_doc exceeds claim x evidence capacity");
  }

  Rng rng(config.seed);
  auto filler = [&]() { return "w" + std::to_string(rng.index(static_cast<std::size_t>(config.vocab_size))); };
  auto fillers = [&](std::string& text, int lo, int hi) {
    const int count = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
    for (int i = 0; i < count; ++i) text += " " + filler();
  };

  std::vector<Document> docs;
  docs.reserve(config.n_docs);
  const int q = config.quads_per_doc;
  for (std::size_t d = 0; d < config.n_docs; ++d) {
    const int max_claims = std::min({q, config.max_sentences - q, static_cast<int>(kLinkKeys.size())});
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_claims)));

    // Random composition of q evidence sentences into k non-empty blocks.
    std::vector<int> cuts(static_cast<std::size_t>(q - 1));
    for (int i = 0; i < q - 1; ++i) cuts[static_cast<std::size_t>(i)] = i + 1;
    rng.shuffle(cuts);
    cuts.resize(static_cast<std::size_t>(k - 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<int> block_sizes;
    int prev = 0;
    for (int c : cuts) {
      block_sizes.push_back(c - prev);
      prev = c;
    }
    block_sizes.push_back(q - prev);

    const int spare = config.max_sentences - k - q;
    const int n_fill = static_cast<int>(rng.index(static_cast<std::size_t>(spare + 1)));
    const int n_lead = static_cast<int>(rng.index(static_cast<std::size_t>(n_fill + 1)));

    std::vector<std::string_view> keys(kLinkKeys.begin(), kLinkKeys.end());
    rng.shuffle(keys);

    std::vector<std::string> sentences;
    std::vector<Quadruplet> quads;
    auto add_filler_sentence = [&]() {
      std::string text = filler();
      fillers(text, 2, 4);
      sentences.push_back(text);
    };
    for (int i = 0; i < n_lead; ++i) add_filler_sentence();
    for (int b = 0; b < k; ++b) {
      const Stance stance = kStances[rng.index(kStances.size())];
      const auto& cues = stance == Stance::Support ? kSupportCues : kAgainstCues;
      const std::string_view key = keys[static_cast<std::size_t>(b)];
      std::string claim = std::string(kClaimMarkers[rng.index(kClaimMarkers.size())]) + " " +
                          std::string(cues[rng.index(cues.size())]) + " " + std::string(key);
      fillers(claim, 1, 3);
      sentences.push_back(claim);
      const int claim_id = static_cast<int>(sentences.size());
      for (int e = 0; e < block_sizes[static_cast<std::size_t>(b)]; ++e) {
        const EvidenceType type = kEvidenceTypes[rng.index(kEvidenceTypes.size())];
        const auto& type_cues = kTypeCues[static_cast<std::size_t>(type)];
        std::string evidence = std::string(type_cues[rng.index(type_cues.size())]) + " " + std::string(key);
        fillers(evidence, 1, 3);
        sentences.push_back(evidence);
        quads.push_back({claim_id, static_cast<int>(sentences.size()), stance, type});
      }
    }
    for (int i = n_lead; i < n_fill; ++i) add_filler_sentence();

    std::string topic = "should we support";
    fillers(topic, 1, 2);
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", d);
    docs.push_back(make_document(id, topic, sentences, quads));
  }
  return docs;
}

QuadSet random_quads(Rng& rng, int n, std::size_t max_quads) {
  if (n < 2) throw std::invalid_argument("random_quads needs at least two sentences");
  QuadSet out;
  const std::size_t target = rng.index(max_quads + 1);
  std::vector<std::optional<Stance>> stance(static_cast<std::size_t>(n) + 1);
  std::set<std::pair<int, int>> pairs;
  for (std::size_t tries = 0; out.size() < target && tries < 8 * max_quads + 8; ++tries) {
    const int c = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    int e = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n - 1)));
    if (e >= c) ++e;
    if (!pairs.insert({c, e}).second) continue;
    auto& s = stance[static_cast<std::size_t>(c)];
    if (!s) s = kStances[rng.index(kStances.size())];
    out.insert({c, e, *s, kEvidenceTypes[rng.index(kEvidenceTypes.size())]});
  }
  return out;
}

int max_sentence_count(const std::vector<Document>& docs) {
  int n = 0;
  for (const Document& doc : docs) n = std::max(n, doc.n());
  return n;
}

}  // namespace aqe
