#include "aqe/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "aqe/error.hpp"

namespace aqe {

std::string_view projection_name(Projection proj) {
  switch (proj) {
    case Projection::Quad: return "quad";
    case Projection::ClaimEvidence: return "claim-evidence";
    case Projection::ClaimEvidenceType: return "claim-evidence-type";
    case Projection::ClaimStance: return "claim-stance";
    case Projection::ClaimEvidenceStance: return "claim-evidence-stance";
    case Projection::Claim: return "claim";
  }
  return "quad";
}

std::optional<Projection> projection_from_name(std::string_view name) {
  for (Projection p : kBreakdownOrder) {
    if (projection_name(p) == name) return p;
  }
  return std::nullopt;
}

ProjectedTuple project(const Quadruplet& q, Projection proj) {
  const int stance = static_cast<int>(q.stance);
  const int type = static_cast<int>(q.type);
  switch (proj) {
    case Projection::Quad: return {q.claim, q.evidence, stance, type};
    case Projection::ClaimEvidence: return {q.claim, q.evidence, -1, -1};
    case Projection::ClaimEvidenceType: return {q.claim, q.evidence, -1, type};
    case Projection::ClaimStance: return {q.claim, -1, stance, -1};
    case Projection::ClaimEvidenceStance: return {q.claim, q.evidence, stance, -1};
    case Projection::Claim: return {q.claim, -1, -1, -1};
  }
  return {};
}

MatchReport make_report(std::size_t n_correct, std::size_t n_pred, std::size_t n_gold) {
  MatchReport r;
  r.n_correct = n_correct;
  r.n_pred = n_pred;
  r.n_gold = n_gold;
  r.precision = n_pred ? static_cast<double>(n_correct) / static_cast<double>(n_pred) : 0.0;
  r.recall = n_gold ? static_cast<double>(n_correct) / static_cast<double>(n_gold) : 0.0;
  const double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

namespace {

std::set<ProjectedTuple> projected(const QuadSet& quads, Projection proj) {
  std::set<ProjectedTuple> out;
  for (const Quadruplet& q : quads) out.insert(project(q, proj));
  return out;
}

}  // namespace

MatchReport match_score(const std::vector<QuadSet>& gold, const std::vector<QuadSet>& pred, Projection proj) {
  if (gold.size() != pred.size()) {
    throw ValidationError("gold has " + std::to_string(gold.size()) + " documents, predictions have " +
                          std::to_string(pred.size()));
  }
  const auto count = static_cast<std::ptrdiff_t>(gold.size());
  std::size_t correct = 0, n_pred = 0, n_gold = 0;
#pragma omp parallel for reduction(+ : correct, n_pred, n_gold) if (count >= 256)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto g = projected(gold[static_cast<std::size_t>(i)], proj);
    const auto p = projected(pred[static_cast<std::size_t>(i)], proj);
    n_gold += g.size();
    n_pred += p.size();
    for (const ProjectedTuple& t : p) correct += g.count(t);
  }
  return make_report(correct, n_pred, n_gold);
}

std::vector<BreakdownRow> breakdown_report(const std::vector<QuadSet>& gold,
                                           const std::vector<QuadSet>& pred) {
  std::vector<BreakdownRow> rows;
  for (Projection p : kBreakdownOrder) rows.push_back({p, match_score(gold, pred, p)});
  return rows;
}

std::vector<QuadSet> gold_sets(const std::vector<Document>& docs) {
  std::vector<QuadSet> out;
  out.reserve(docs.size());
  for (const Document& d : docs) out.push_back(d.gold);
  return out;
}

std::vector<std::string> read_predictions(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return read_predictions(in);
}

void save_predictions(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const std::string& l : lines) out << l << '\n';
  if (!out) throw Error("failed writing " + path);
}

ParsedPredictions parse_predictions(const std::vector<Document>& docs,
                                    const std::vector<std::string>& lines, TemplateKind kind) {
  if (docs.size() != lines.size()) {
    throw ValidationError("prediction file has " + std::to_string(lines.size()) + " lines, corpus has " +
                          std::to_string(docs.size()) + " documents");
  }
  ParsedPredictions out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    ParseOutcome parsed = parse_quads(lines[i], kind, docs[i].n());
    out.warnings += parsed.warnings.size();
    out.sets.push_back(std::move(parsed.quads));
  }
  return out;
}

FileScore score_files(const std::string& gold_path, const std::string& pred_path, TemplateKind kind,
                      Projection proj) {
  const std::vector<Document> docs = load_corpus(gold_path);
  const ParsedPredictions parsed = parse_predictions(docs, load_predictions(pred_path), kind);
  return {match_score(gold_sets(docs), parsed.sets, proj), parsed.warnings};
}

std::string format_table(const std::vector<BreakdownRow>& rows) {
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, projection_name(r.projection).size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %9s %9s %9s %8s %8s %8s\n", static_cast<int>(width), "projection",
                "precision", "recall", "f1", "correct", "pred", "gold");
  out += buf;
  for (const auto& r : rows) {
    const MatchReport& m = r.report;
    std::snprintf(buf, sizeof buf, "%-*s %9.4f %9.4f %9.4f %8zu %8zu %8zu\n", static_cast<int>(width),
                  std::string(projection_name(r.projection)).c_str(), m.precision, m.recall, m.f1,
                  m.n_correct, m.n_pred, m.n_gold);
    out += buf;
  }
  return out;
}

std::string format_key_values(Projection proj, const MatchReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "projection=%s precision=%.6f recall=%.6f f1=%.6f correct=%zu pred=%zu gold=%zu",
                std::string(projection_name(proj)).c_str(), m.precision, m.recall, m.f1, m.n_correct,
                m.n_pred, m.n_gold);
  return buf;
}

}  // namespace aqe
