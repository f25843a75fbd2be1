#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "aqe/nn.hpp"
#include "aqe/template_codec.hpp"
#include "aqe/tensor.hpp"

namespace aqe {

/// Atomic output vocabulary of the template decoder: PAD, BOS, EOS, "#1".."#n_max",
/// then the literals of the template kind (stance phrases are single tokens).
class DecoderVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  DecoderVocab() = default;
  DecoderVocab(int n_max, TemplateKind kind);

  std::size_t size() const { return tokens_.size(); }
  int n_max() const { return n_max_; }
  TemplateKind kind() const { return kind_; }
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Splits a serialized target into token ids (no EOS). Throws Error on text
  /// that is not made of vocabulary literals.
  std::vector<int> tokenize(std::string_view text) const;
  /// Inverse of tokenize; control tokens are skipped.
  std::string detokenize(const std::vector<int>& ids) const;
  /// tokenize(serialize(quads, kind)) followed by EOS.
  std::vector<int> target(const QuadSet& quads) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> lookup_;
  std::size_t longest_ = 0;
  int n_max_ = 0;
  TemplateKind kind_ = TemplateKind::Default;
};

inline DecoderVocab build_decoder_vocab(int n_max, TemplateKind kind) { return {n_max, kind}; }

struct DecoderConfig {
  std::size_t heads = 4;
  std::size_t max_len = 512;  // generated tokens
};

/// Token embeddings, causal self-attention, cross-attention over H_enc,
/// a feed-forward block and an output projection to vocabulary logits.
struct DecoderParams {
  Matrix embedding;
  nn::AttentionParams self_attention;
  nn::AttentionParams cross_attention;
  nn::FeedForwardParams ffn;
  Matrix output;  // d x |V|

  DecoderParams() = default;
  DecoderParams(std::size_t vocab_size, std::size_t dim);
  void visit(const nn::TensorVisitor& f);
  void visit(const nn::ConstTensorVisitor& f) const;
  void init(Rng& rng);
};

struct DecoderState {
  std::vector<int> inputs;
  Matrix z0, z0_pos;
  nn::AttentionCache self_attention;
  Matrix z1, z1_pos;
  Matrix memory_keys;  // H_enc plus encoder position signal
  nn::AttentionCache cross_attention;
  Matrix z2;
  nn::FeedForwardCache ffn;
  Matrix z3;
  Matrix probs;  // T x |V|
};

/// Teacher-forced pass: inputs are BOS followed by the target minus its last token.
DecoderState decoder_forward(const DecoderParams& params, const DecoderConfig& config,
                             const Matrix& hidden, const std::vector<int>& inputs);

/// Backward from the summed NLL of targets; accumulates parameter gradients and
/// dL/dH_enc into d_hidden. Returns the loss.
double decoder_loss_backward(const DecoderParams& params, DecoderParams& grads,
                             const DecoderState& state, const std::vector<int>& targets,
                             Matrix& d_hidden);

/// Teacher-forcing inputs for a target sequence: [BOS, y_1, ..., y_{T-1}].
std::vector<int> shift_right(const std::vector<int>& targets);

/// L_g = -sum_t log probs(t, target_t). Throws on a length mismatch or
/// rows that are not normalized within 1e-6.
double generation_loss(const std::vector<int>& targets, const Matrix& probs);

/// Greedy argmax decoding (ties to the lowest index) until EOS or max_len
/// tokens. Returned ids exclude EOS.
std::vector<int> greedy_decode(const Matrix& hidden, const DecoderParams& params,
                               const DecoderConfig& config, std::size_t max_len);

/// Per-step logits from the incremental decoder for a forced prefix; used to
/// check the cached path against decoder_forward.
Matrix incremental_logits(const Matrix& hidden, const DecoderParams& params,
                          const DecoderConfig& config, const std::vector<int>& inputs);

}  // namespace aqe
