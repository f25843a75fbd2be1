#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aqe/corpus.hpp"

namespace aqe::testing {

// Test-side generators built on std::mt19937 so they share nothing with the
// library's own random helpers.
class Gen {
 public:
  explicit Gen(std::uint32_t seed) : engine_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin() { return range(0, 1) == 1; }
  std::mt19937& engine() { return engine_; }

  Stance stance() { return coin() ? Stance::Support : Stance::Against; }
  EvidenceType type() { return static_cast<EvidenceType>(range(0, 4)); }

  // Valid set over sentences 1..n: one stance per claim, no self-evidence,
  // unique (claim, evidence) pairs.
  QuadSet quads(int n, int max_quads) {
    QuadSet out;
    if (n < 2) return out;
    const int target = range(0, max_quads);
    std::vector<int> stance_of(static_cast<std::size_t>(n) + 1, -1);
    std::set<std::pair<int, int>> used;
    for (int tries = 0; static_cast<int>(out.size()) < target && tries < 20 * (max_quads + 1); ++tries) {
      const int c = range(1, n);
      const int e = range(1, n);
      if (c == e || !used.insert({c, e}).second) continue;
      int& s = stance_of[static_cast<std::size_t>(c)];
      if (s < 0) s = range(0, 1);
      out.insert({c, e, static_cast<Stance>(s), type()});
    }
    return out;
  }

  std::string word() {
    static const char* kWords[] = {"tax", "policy", "is", "bad", "good", "study", "shows", "people",
                                   "the", "a", "health", "cost", "risk", "value", "expert", "says"};
    return kWords[range(0, 15)];
  }

  std::string sentence(int min_words, int max_words) {
    std::string s = word();
    const int extra = range(min_words - 1, max_words - 1);
    for (int i = 0; i < extra; ++i) s += " " + word();
    return s;
  }

  Document document(const std::string& id, int n, int max_quads) {
    std::vector<std::string> body;
    for (int i = 0; i < n; ++i) body.push_back(sentence(1, 5));
    const QuadSet q = quads(n, max_quads);
    return make_document(id, sentence(2, 4), body, {q.begin(), q.end()});
  }

 private:
  std::mt19937 engine_;
};

}  // namespace aqe::testing
