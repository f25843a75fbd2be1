#include "aqe/quadtag.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aqe/error.hpp"
#include "aqe/kernels.hpp"
#include "aqe/rng.hpp"

namespace aqe {

TagLabel stance_label(Stance s) {
  return s == Stance::Support ? TagLabel::Support : TagLabel::Against;
}

TagLabel type_label(EvidenceType t) {
  return static_cast<TagLabel>(static_cast<int>(TagLabel::Expert) + static_cast<int>(t));
}

bool is_stance_label(TagLabel l) { return l == TagLabel::Support || l == TagLabel::Against; }
bool is_type_label(TagLabel l) { return l >= TagLabel::Expert; }

Stance label_stance(TagLabel l) {
  return l == TagLabel::Support ? Stance::Support : Stance::Against;
}

EvidenceType label_type(TagLabel l) {
  return static_cast<EvidenceType>(static_cast<int>(l) - static_cast<int>(TagLabel::Expert));
}

TagTable::TagTable(int n)
    : n_(n), cells_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1), TagLabel::Null) {}

std::size_t TagTable::index(int row, int col) const {
  if (row < 1 || row > n_ || col < 0 || col > n_) throw std::out_of_range("table cell out of range");
  return static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(n_ + 1) +
         static_cast<std::size_t>(col);
}

void TagTable::set(int row, int col, TagLabel label) {
  const std::size_t idx = index(row, col);
  if (label != TagLabel::Null) {
    if (col == 0 && !is_stance_label(label)) throw ValidationError("stance column only holds stance labels");
    if (col != 0 && !is_type_label(label)) throw ValidationError("evidence columns only hold type labels");
    if (col == row) throw ValidationError("diagonal cells must stay null");
  }
  cells_[idx] = label;
}

TagTable build_gold_table(const QuadSet& quads, int n) {
  TagTable table(n);
  auto put = [&table](int row, int col, TagLabel label) {
    const TagLabel current = table.at(row, col);
    if (current != TagLabel::Null && current != label) {
      throw ValidationError("conflicting labels for cell (" + std::to_string(row) + ", " +
                            std::to_string(col) + ")");
    }
    table.set(row, col, label);
  };
  for (const Quadruplet& q : quads) {
    if (q.claim < 1 || q.claim > n || q.evidence < 1 || q.evidence > n) {
      throw ValidationError("quadruplet references a sentence outside 1..n");
    }
    put(q.claim, 0, stance_label(q.stance));
    put(q.claim, q.evidence, type_label(q.type));
  }
  return table;
}

EntrySet positive_entries(const TagTable& table) {
  EntrySet out;
  for (int i = 1; i <= table.n(); ++i) {
    for (int j = 0; j <= table.n(); ++j) {
      if (table.at(i, j) != TagLabel::Null) out.push_back({i, j});
    }
  }
  return out;
}

EntrySet sample_negatives(const TagTable& table, double eta, std::uint64_t seed,
                          bool include_diagonal) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
  EntrySet eligible;
  std::size_t positives = 0;
  for (int i = 1; i <= table.n(); ++i) {
    for (int j = 0; j <= table.n(); ++j) {
      if (table.at(i, j) != TagLabel::Null) {
        ++positives;
      } else if (include_diagonal || i != j) {
        eligible.push_back({i, j});
      }
    }
  }
  const auto wanted = static_cast<std::size_t>(std::floor(eta * static_cast<double>(positives) + 1e-9));
  const std::size_t count = std::min(wanted, eligible.size());
  // Partial Fisher-Yates: the first `count` slots become the sample.
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + rng.index(eligible.size() - k);
    std::swap(eligible[k], eligible[pick]);
  }
  eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

BiaffineParams::BiaffineParams(std::size_t dim, std::size_t proj, std::size_t labels)
    : claim_w(dim, proj),
      claim_b(1, proj),
      evidence_w(dim, proj),
      evidence_b(1, proj),
      u(proj, labels * proj),
      w_claim(labels, proj),
      w_evidence(proj, labels) {}

void BiaffineParams::visit(const nn::TensorVisitor& f) {
  f("biaffine.claim_w", claim_w);
  f("biaffine.claim_b", claim_b);
  f("biaffine.evidence_w", evidence_w);
  f("biaffine.evidence_b", evidence_b);
  f("biaffine.u", u);
  f("biaffine.w_claim", w_claim);
  f("biaffine.w_evidence", w_evidence);
}

void BiaffineParams::visit(const nn::ConstTensorVisitor& f) const {
  f("biaffine.claim_w", claim_w);
  f("biaffine.claim_b", claim_b);
  f("biaffine.evidence_w", evidence_w);
  f("biaffine.evidence_b", evidence_b);
  f("biaffine.u", u);
  f("biaffine.w_claim", w_claim);
  f("biaffine.w_evidence", w_evidence);
}

void BiaffineParams::init(Rng& rng) {
  const double dim = static_cast<double>(claim_w.rows());
  const double p = static_cast<double>(proj());
  nn::init_normal(claim_w, rng, 1.0 / std::sqrt(dim));
  nn::init_normal(evidence_w, rng, 1.0 / std::sqrt(dim));
  claim_b.fill(0.0);
  evidence_b.fill(0.0);
  nn::init_normal(u, rng, 0.1 / p);
  nn::init_normal(w_claim, rng, 0.1 / std::sqrt(p));
  nn::init_normal(w_evidence, rng, 0.1 / std::sqrt(p));
}

std::vector<double> biaffine_logits(std::span<const double> x_claim, std::span<const double> x_evidence,
                                    const BiaffineParams& params) {
  const std::size_t p = params.proj();
  const std::size_t r = params.labels();
  std::vector<double> logits(r, 0.0);
  // v = x_c^T U, then logits_k = v_k . x_e
  std::vector<double> v(r * p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    const double xa = x_claim[a];
    if (xa == 0.0) continue;
    const auto urow = params.u.row(a);
    for (std::size_t m = 0; m < r * p; ++m) v[m] += xa * urow[m];
  }
  for (std::size_t k = 0; k < r; ++k) {
    double s = 0.0;
    for (std::size_t b = 0; b < p; ++b) s += v[k * p + b] * x_evidence[b];
    for (std::size_t a = 0; a < p; ++a) s += params.w_claim(k, a) * x_claim[a];
    for (std::size_t b = 0; b < p; ++b) s += x_evidence[b] * params.w_evidence(b, k);
    logits[k] = s;
  }
  return logits;
}

namespace {

void softmax_in_place(std::vector<double>& v) {
  double peak = v[0];
  for (double x : v) peak = std::max(peak, x);
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : v) x /= total;
}

LabelDistribution to_distribution(std::vector<double> logits) {
  if (logits.size() != kNumTagLabels) throw std::invalid_argument("biaffine: expected 8 labels");
  softmax_in_place(logits);
  LabelDistribution out;
  std::copy(logits.begin(), logits.end(), out.begin());
  return out;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out = kernels::matmul(x, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b(0, c);
  }
  return out;
}

void check_cell(const Matrix& sentences, int row, int col) {
  const int n = static_cast<int>(sentences.rows()) - 1;
  if (row < 1 || row > n || col < 0 || col > n) throw std::out_of_range("biaffine: cell out of range");
}

}  // namespace

Projections project_sentences(const Matrix& sentences, const BiaffineParams& params) {
  return {affine(sentences, params.claim_w, params.claim_b),
          affine(sentences, params.evidence_w, params.evidence_b)};
}

LabelDistribution biaffine_scores(const Matrix& sentences, const BiaffineParams& params, int row,
                                  int col) {
  check_cell(sentences, row, col);
  const Projections x = project_sentences(sentences, params);
  return to_distribution(biaffine_logits(x.claim.row(static_cast<std::size_t>(row)),
                                         x.evidence.row(static_cast<std::size_t>(col)), params));
}

TableScores score_table(const Matrix& sentences, const BiaffineParams& params) {
  const int n = static_cast<int>(sentences.rows()) - 1;
  TableScores scores(n);
  const Projections x = project_sentences(sentences, params);
  const std::size_t p = params.proj();
  const std::size_t r = params.labels();
#pragma omp parallel for schedule(static) if (n >= 16)
  for (int i = 1; i <= n; ++i) {
    const auto xc = x.claim.row(static_cast<std::size_t>(i));
    std::vector<double> v(r * p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
      const auto urow = params.u.row(a);
      for (std::size_t m = 0; m < r * p; ++m) v[m] += xc[a] * urow[m];
    }
    std::vector<double> unary(r, 0.0);
    for (std::size_t k = 0; k < r; ++k) {
      for (std::size_t a = 0; a < p; ++a) unary[k] += params.w_claim(k, a) * xc[a];
    }
    std::vector<double> logits(r);
    for (int j = 0; j <= n; ++j) {
      const auto xe = x.evidence.row(static_cast<std::size_t>(j));
      for (std::size_t k = 0; k < r; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < p; ++b) s += v[k * p + b] * xe[b];
        s += unary[k];
        for (std::size_t b = 0; b < p; ++b) s += xe[b] * params.w_evidence(b, k);
        logits[k] = s;
      }
      scores.at(i, j) = to_distribution(logits);
    }
  }
  return scores;
}

namespace reference {

TableScores score_table(const Matrix& sentences, const BiaffineParams& params) {
  const int n = static_cast<int>(sentences.rows()) - 1;
  TableScores scores(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) scores.at(i, j) = biaffine_scores(sentences, params, i, j);
  }
  return scores;
}

}  // namespace reference

TableScores one_hot(const TagTable& table) {
  TableScores scores(table.n());
  for (int i = 1; i <= table.n(); ++i) {
    for (int j = 0; j <= table.n(); ++j) {
      LabelDistribution d{};
      d[static_cast<std::size_t>(table.at(i, j))] = 1.0;
      scores.at(i, j) = d;
    }
  }
  return scores;
}

double tagging_loss(std::span<const LabelDistribution> probs, std::span<const TagLabel> gold) {
  if (probs.size() != gold.size()) throw std::invalid_argument("tagging_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t e = 0; e < probs.size(); ++e) {
    double total = 0.0;
    for (double v : probs[e]) {
      if (!(v >= 0.0)) throw std::invalid_argument("tagging_loss: negative probability");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("tagging_loss: distribution not normalized");
    const double pt = probs[e][static_cast<std::size_t>(gold[e])];
    if (pt <= 0.0) throw std::invalid_argument("tagging_loss: zero probability on the true label");
    loss -= std::log(pt);
  }
  return loss;
}

QuadSet decode_table(const TableScores& scores) {
  const int n = scores.n();
  auto argmax = [](const LabelDistribution& d) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.size(); ++k) {
      if (d[k] > d[best]) best = k;
    }
    return static_cast<TagLabel>(best);
  };
  QuadSet out;
  for (int i = 1; i <= n; ++i) {
    const TagLabel stance = argmax(scores.at(i, 0));
    if (!is_stance_label(stance)) continue;
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      const TagLabel label = argmax(scores.at(i, j));
      if (!is_type_label(label)) continue;
      out.insert({i, j, label_stance(stance), label_type(label)});
    }
  }
  return out;
}

double biaffine_loss_backward(const Matrix& sentences, const BiaffineParams& params,
                              const EntrySet& entries, const TagTable& gold, BiaffineParams& grads,
                              Matrix& d_sentences) {
  const std::size_t p = params.proj();
  const std::size_t r = params.labels();
  const Projections x = project_sentences(sentences, params);
  Matrix d_claim(x.claim.rows(), p);
  Matrix d_evidence(x.evidence.rows(), p);
  double loss = 0.0;
  for (const Cell& cell : entries) {
    const auto xc = x.claim.row(static_cast<std::size_t>(cell.row));
    const auto xe = x.evidence.row(static_cast<std::size_t>(cell.col));
    std::vector<double> probs = biaffine_logits(xc, xe, params);
    softmax_in_place(probs);
    const auto truth = static_cast<std::size_t>(gold.at(cell.row, cell.col));
    loss -= std::log(probs[truth]);
    std::vector<double>& g = probs;  // dL/dlogits = softmax - onehot
    g[truth] -= 1.0;

    auto dxc = d_claim.row(static_cast<std::size_t>(cell.row));
    auto dxe = d_evidence.row(static_cast<std::size_t>(cell.col));
    for (std::size_t a = 0; a < p; ++a) {
      auto urow = params.u.row(a);
      auto gurow = grads.u.row(a);
      for (std::size_t k = 0; k < r; ++k) {
        const double gk = g[k];
        double acc = 0.0;
        for (std::size_t b = 0; b < p; ++b) {
          gurow[k * p + b] += xc[a] * gk * xe[b];
          acc += urow[k * p + b] * xe[b];
          dxe[b] += gk * xc[a] * urow[k * p + b];
        }
        dxc[a] += gk * acc;
      }
    }
    for (std::size_t k = 0; k < r; ++k) {
      for (std::size_t a = 0; a < p; ++a) {
        grads.w_claim(k, a) += g[k] * xc[a];
        dxc[a] += g[k] * params.w_claim(k, a);
      }
      for (std::size_t b = 0; b < p; ++b) {
        grads.w_evidence(b, k) += xe[b] * g[k];
        dxe[b] += params.w_evidence(b, k) * g[k];
      }
    }
  }
  kernels::gemm(grads.claim_w, sentences, kernels::Trans::Yes, d_claim, kernels::Trans::No, true);
  kernels::gemm(grads.evidence_w, sentences, kernels::Trans::Yes, d_evidence, kernels::Trans::No, true);
  for (std::size_t row = 0; row < d_claim.rows(); ++row) {
    for (std::size_t c = 0; c < p; ++c) {
      grads.claim_b(0, c) += d_claim(row, c);
      grads.evidence_b(0, c) += d_evidence(row, c);
    }
  }
  kernels::gemm(d_sentences, d_claim, kernels::Trans::No, params.claim_w, kernels::Trans::Yes, true);
  kernels::gemm(d_sentences, d_evidence, kernels::Trans::No, params.evidence_w, kernels::Trans::Yes, true);
  return loss;
}

}  // namespace aqe
