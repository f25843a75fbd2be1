#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/template_codec.hpp"

namespace aqe {

enum class Projection { Quad, ClaimEvidence, ClaimEvidenceType, ClaimStance, ClaimEvidenceStance, Claim };

/// Row order of the breakdown report.
inline constexpr std::array<Projection, 6> kBreakdownOrder = {
    Projection::Claim,           Projection::ClaimEvidence,       Projection::ClaimStance,
    Projection::ClaimEvidenceType, Projection::ClaimEvidenceStance, Projection::Quad};

/// CLI spelling: quad, claim-evidence, claim-evidence-type, claim-stance,
/// claim-evidence-stance, claim.
std::string_view projection_name(Projection proj);
std::optional<Projection> projection_from_name(std::string_view name);

/// Projected tuple; fields dropped by the projection are -1.
using ProjectedTuple = std::array<int, 4>;
ProjectedTuple project(const Quadruplet& q, Projection proj);

struct MatchReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
};

MatchReport make_report(std::size_t n_correct, std::size_t n_pred, std::size_t n_gold);

/// Micro-averaged exact match over aligned documents. Throws ValidationError on
/// a length mismatch.
MatchReport match_score(const std::vector<QuadSet>& gold, const std::vector<QuadSet>& pred, Projection proj);

struct BreakdownRow {
  Projection projection;
  MatchReport report;
};

std::vector<BreakdownRow> breakdown_report(const std::vector<QuadSet>& gold,
                                           const std::vector<QuadSet>& pred);

std::vector<QuadSet> gold_sets(const std::vector<Document>& docs);

/// One template string per line, aligned with the corpus.
std::vector<std::string> read_predictions(std::istream& in);
std::vector<std::string> load_predictions(const std::string& path);
void save_predictions(const std::string& path, const std::vector<std::string>& lines);

struct ParsedPredictions {
  std::vector<QuadSet> sets;
  std::size_t warnings = 0;
};

/// Parses each line against its document's sentence count.
ParsedPredictions parse_predictions(const std::vector<Document>& docs,
                                    const std::vector<std::string>& lines, TemplateKind kind);

struct FileScore {
  MatchReport report;
  std::size_t warnings = 0;
};

FileScore score_files(const std::string& gold_path, const std::string& pred_path, TemplateKind kind,
                      Projection proj);

/// Aligned plain-text table.
std::string format_table(const std::vector<BreakdownRow>& rows);
/// "projection=quad precision=... recall=... f1=... correct=.. pred=.. gold=.."
std::string format_key_values(Projection proj, const MatchReport& report);

}  // namespace aqe
