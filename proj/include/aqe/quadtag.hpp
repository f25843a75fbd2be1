#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/nn.hpp"
#include "aqe/tensor.hpp"

namespace aqe {

/// Shared label space of the tagging table: null, the two stances, the five types.
enum class TagLabel : std::uint8_t {
  Null = 0,
  Support,
  Against,
  Expert,
  Research,
  Case,
  Explanation,
  Others
};

inline constexpr std::size_t kNumTagLabels = 8;
using LabelDistribution = std::array<double, kNumTagLabels>;

TagLabel stance_label(Stance s);
TagLabel type_label(EvidenceType t);
bool is_stance_label(TagLabel l);
bool is_type_label(TagLabel l);
Stance label_stance(TagLabel l);       // requires is_stance_label
EvidenceType label_type(TagLabel l);   // requires is_type_label

/// One table coordinate: row = candidate claim (1..n), column 0 = stance,
/// column j >= 1 = evidence sentence j.
struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

using EntrySet = std::vector<Cell>;  // sorted, unique

/// n x (n+1) grid of labels.
class TagTable {
 public:
  explicit TagTable(int n = 0);

  int n() const { return n_; }
  TagLabel at(int row, int col) const { return cells_[index(row, col)]; }
  /// Enforces column/label compatibility and the null diagonal.
  void set(int row, int col, TagLabel label);

  std::size_t cell_count() const { return cells_.size(); }
  friend bool operator==(const TagTable&, const TagTable&) = default;

 private:
  std::size_t index(int row, int col) const;

  int n_ = 0;
  std::vector<TagLabel> cells_;
};

/// Throws ValidationError on conflicting labels for the same cell.
TagTable build_gold_table(const QuadSet& quads, int n);

/// Non-null cells.
EntrySet positive_entries(const TagTable& table);

/// Uniform sample without replacement of null cells, |N| = min(floor(eta |P|), #eligible).
/// Diagonal cells are not eligible unless include_diagonal is set.
EntrySet sample_negatives(const TagTable& table, double eta, std::uint64_t seed,
                          bool include_diagonal = false);

/// Linear_c, Linear_e (d -> p, with bias), U (p x r x p stored as p x (r*p),
/// block k holding U_k), W_i (r x p), W_j (p x r).
struct BiaffineParams {
  Matrix claim_w, claim_b;
  Matrix evidence_w, evidence_b;
  Matrix u, w_claim, w_evidence;

  BiaffineParams() = default;
  BiaffineParams(std::size_t dim, std::size_t proj, std::size_t labels = kNumTagLabels);
  std::size_t proj() const { return u.rows(); }
  std::size_t labels() const { return w_claim.rows(); }
  void visit(const nn::TensorVisitor& f);
  void visit(const nn::ConstTensorVisitor& f) const;
  void init(Rng& rng);
};

/// Logits x_c^T U x_e + W_i x_c + x_e^T W_j for projected vectors.
std::vector<double> biaffine_logits(std::span<const double> x_claim, std::span<const double> x_evidence,
                                    const BiaffineParams& params);

struct Projections {
  Matrix claim;     // (n+1) x p, row i = Linear_c(h_i)
  Matrix evidence;  // (n+1) x p, row j = Linear_e(h_j)
};

Projections project_sentences(const Matrix& sentences, const BiaffineParams& params);

/// Label distribution for cell (i, j); column 0 pairs the claim with the topic row.
LabelDistribution biaffine_scores(const Matrix& sentences, const BiaffineParams& params, int row,
                                  int col);

/// Distributions for every cell of the n x (n+1) table.
class TableScores {
 public:
  explicit TableScores(int n = 0) : n_(n), probs_(static_cast<std::size_t>(n) * (n + 1)) {}
  int n() const { return n_; }
  LabelDistribution& at(int row, int col) { return probs_[index(row, col)]; }
  const LabelDistribution& at(int row, int col) const { return probs_[index(row, col)]; }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(n_ + 1) +
           static_cast<std::size_t>(col);
  }
  int n_;
  std::vector<LabelDistribution> probs_;
};

/// Rows are scored in parallel with OpenMP.
TableScores score_table(const Matrix& sentences, const BiaffineParams& params);

namespace reference {
/// Cell-by-cell serial scorer kept as the oracle for score_table.
TableScores score_table(const Matrix& sentences, const BiaffineParams& params);
}  // namespace reference

/// One-hot distributions of a label table.
TableScores one_hot(const TagTable& table);

/// Summed cross-entropy over the given entries. Throws if a distribution is not
/// normalized within 1e-6 or a true-label probability is zero.
double tagging_loss(std::span<const LabelDistribution> probs, std::span<const TagLabel> gold);

/// Argmax labelling (ties to the lowest label), out-of-region labels mapped to
/// null, then quads from rows whose stance cell is set.
QuadSet decode_table(const TableScores& scores);

/// Cross-entropy over entries with gradients: accumulates parameter gradients
/// and dL/d(sentence embeddings) into d_sentences. Returns the loss.
double biaffine_loss_backward(const Matrix& sentences, const BiaffineParams& params,
                              const EntrySet& entries, const TagTable& gold, BiaffineParams& grads,
                              Matrix& d_sentences);

}  // namespace aqe
