#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/rng.hpp"

namespace aqe {

enum class Stance : std::uint8_t { Support, Against };
enum class EvidenceType : std::uint8_t { Expert, Research, Case, Explanation, Others };

inline constexpr std::array<Stance, 2> kStances = {Stance::Support, Stance::Against};
inline constexpr std::array<EvidenceType, 5> kEvidenceTypes = {
    EvidenceType::Expert, EvidenceType::Research, EvidenceType::Case,
    EvidenceType::Explanation, EvidenceType::Others};

/// Lowercase wire names ("support", "research") used in corpus files.
std::string_view wire_name(Stance stance);
std::string_view wire_name(EvidenceType type);
/// Display name with initial capital ("Research"), as rendered in templates.
std::string_view display_name(EvidenceType type);

/// Case-insensitive lookups; nullopt for anything else.
std::optional<Stance> stance_from_name(std::string_view name);
std::optional<EvidenceType> type_from_name(std::string_view name);

struct Sentence {
  int id = 0;  // 0 is the topic
  std::string text;
  std::vector<std::string> tokens;
};

/// One (claim, evidence, stance, type) unit. Sentence IDs are 1-based.
struct Quadruplet {
  int claim = 0;
  int evidence = 0;
  Stance stance = Stance::Support;
  EvidenceType type = EvidenceType::Expert;

  auto operator<=>(const Quadruplet&) const = default;
};

/// Ordered by (claim, evidence, stance, type), so iteration is canonical.
using QuadSet = std::set<Quadruplet>;

struct Document {
  std::string doc_id;
  Sentence topic;
  std::vector<Sentence> body;
  QuadSet gold;
  std::optional<int> paragraphs;  // pass-through metadata

  int n() const { return static_cast<int>(body.size()); }
};

struct CorpusStats {
  std::size_t n_topics = 0;
  std::size_t n_documents = 0;
  std::optional<std::size_t> n_paragraphs;  // only when every document carries it
  std::size_t n_claims = 0;
  std::size_t n_evidence = 0;
  std::size_t n_quadruplets = 0;
};

struct CorpusSplits {
  std::vector<Document> train;
  std::vector<Document> dev;
  std::vector<Document> test;
};

struct SynthConfig {
  std::size_t n_docs = 50;
  int max_sentences = 8;
  int vocab_size = 40;
  int quads_per_doc = 3;
  std::uint64_t seed = 7;
};

/// Whitespace split, lowercased; punctuation stays attached.
std::vector<std::string> tokenize(std::string_view text);

/// Throws ValidationError naming the violated invariant.
void validate_quads(const QuadSet& quads, int n);
void validate_document(const Document& doc);

/// Builds a document from raw strings and validates it.
Document make_document(std::string doc_id, std::string_view topic,
                       const std::vector<std::string>& sentences,
                       const std::vector<Quadruplet>& quads,
                       std::optional<int> paragraphs = std::nullopt);

Document document_from_json_line(std::string_view line);
std::string document_to_json_line(const Document& doc);

/// JSON-Lines corpus. Blank lines are skipped; errors carry the line number.
std::vector<Document> read_corpus(std::istream& in);
std::vector<Document> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<Document>& docs);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

/// Document-level split. Dev and test get floor(ratio * N); train takes the
/// remainder. Each split keeps the input's relative order.
CorpusSplits split_corpus(const std::vector<Document>& docs, std::array<double, 3> ratios,
                          std::uint64_t seed);

CorpusStats compute_stats(const std::vector<Document>& docs);

/// Synthetic documents with stance, type and linking cues a small model can learn.
std::vector<Document> synthesize_corpus(const SynthConfig& config);

/// Random valid quadruplet set over sentences 1..n (n >= 2) with at most
/// max_quads members; used by the round-trip runner.
QuadSet random_quads(Rng& rng, int n, std::size_t max_quads);

/// Largest body size in the corpus.
int max_sentence_count(const std::vector<Document>& docs);

}  // namespace aqe
