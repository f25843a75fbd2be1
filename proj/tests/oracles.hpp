#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/eval.hpp"

namespace aqe::testing {

// Which quadruplet fields a projection keeps: claim, evidence, stance, type.
struct FieldMask {
  bool claim, evidence, stance, type;
};

inline FieldMask mask_of(Projection p) {
  switch (p) {
    case Projection::Quad: return {true, true, true, true};
    case Projection::ClaimEvidence: return {true, true, false, false};
    case Projection::ClaimEvidenceType: return {true, true, false, true};
    case Projection::ClaimStance: return {true, false, true, false};
    case Projection::ClaimEvidenceStance: return {true, true, true, false};
    case Projection::Claim: return {true, false, false, false};
  }
  return {true, true, true, true};
}

inline bool same_under(const Quadruplet& a, const Quadruplet& b, FieldMask m) {
  return (!m.claim || a.claim == b.claim) && (!m.evidence || a.evidence == b.evidence) &&
         (!m.stance || a.stance == b.stance) && (!m.type || a.type == b.type);
}

// Keeps the first representative of every equivalence class, by linear scan.
inline std::vector<Quadruplet> distinct_under(const QuadSet& quads, FieldMask m) {
  std::vector<Quadruplet> out;
  for (const Quadruplet& q : quads) {
    bool seen = false;
    for (const Quadruplet& r : out) seen = seen || same_under(q, r, m);
    if (!seen) out.push_back(q);
  }
  return out;
}

struct Counts {
  std::size_t correct = 0, pred = 0, gold = 0;
};

// Enumerates every (gold, pred) pair per document and counts matches.
inline Counts brute_force_counts(const std::vector<QuadSet>& gold, const std::vector<QuadSet>& pred, Projection p) {
  const FieldMask m = mask_of(p);
  Counts c;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const auto g = distinct_under(gold[d], m);
    const auto q = distinct_under(pred[d], m);
    c.gold += g.size();
    c.pred += q.size();
    for (const Quadruplet& a : q) {
      for (const Quadruplet& b : g) c.correct += same_under(a, b, m) ? 1 : 0;
    }
  }
  return c;
}

inline double oracle_f1(const Counts& c) {
  if (c.correct == 0) return 0.0;
  return 2.0 * static_cast<double>(c.correct) / static_cast<double>(c.pred + c.gold);
}

}  // namespace aqe::testing
