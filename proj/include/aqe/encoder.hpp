#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/nn.hpp"
#include "aqe/tensor.hpp"

namespace aqe {

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kSentenceStart = "<SS>";
inline constexpr std::string_view kSentenceEnd = "<SE>";

/// Word-level encoder vocabulary. Indices 0..3 are PAD, UNK, SS, SE, followed
/// by "#0".."#n_max" and then corpus words by descending frequency, ties
/// broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSS = 2;
  static constexpr int kSE = 3;

  Vocabulary() = default;
  /// Rebuilds from an explicit token list (checkpoint loading).
  explicit Vocabulary(std::vector<std::string> tokens, int n_max);

  int index(const std::string& token) const;  // UNK when absent
  bool contains(const std::string& token) const { return lookup_.count(token) != 0; }
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return tokens_.size(); }
  int n_max() const { return n_max_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  friend Vocabulary build_vocab(const std::vector<Document>& corpus, int n_max);
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> lookup_;
  int n_max_ = 0;
};

Vocabulary build_vocab(const std::vector<Document>& corpus, int n_max);

/// [<SS>, #i, w_1, ..., w_m, <SE>] for the topic (i = 0) and every body sentence.
std::vector<std::string> reformulate_input(const Document& doc);

struct EncodedDocument {
  std::vector<int> token_ids;
  std::vector<std::size_t> ss_positions;  // entry i is the <SS> position of sentence i
};

/// Throws Error when the sequence exceeds max_len.
EncodedDocument encode_tokens(const Document& doc, const Vocabulary& vocab, std::size_t max_len);

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t max_len = 512;
};

/// Embedding table plus one attention block and one feed-forward block.
/// The position signal enters only the query/key inputs, so an all-zero
/// embedding table maps every document to all-zero states.
struct EncoderParams {
  Matrix embedding;
  nn::AttentionParams attention;
  nn::FeedForwardParams ffn;

  EncoderParams() = default;
  EncoderParams(std::size_t vocab_size, std::size_t dim);
  void visit(const nn::TensorVisitor& f);
  void visit(const nn::ConstTensorVisitor& f) const;
  void init(Rng& rng);
};

struct EncoderState {
  EncodedDocument input;
  Matrix x0;      // token embeddings
  Matrix x_pos;   // x0 plus position signal
  nn::AttentionCache attention;
  Matrix x1;      // after attention residual
  nn::FeedForwardCache ffn;
  Matrix hidden;  // H_enc, L x d
};

EncoderState encoder_forward(const EncoderParams& params, const EncoderConfig& config,
                             const EncodedDocument& input);

/// Accumulates into grads given dL/dH_enc.
void encoder_backward(const EncoderParams& params, EncoderParams& grads, const EncoderState& state,
                      const Matrix& d_hidden);

/// Rows of H_enc at the <SS> markers, (n+1) x d.
Matrix sentence_embeddings(const Matrix& hidden, const std::vector<std::size_t>& ss_positions);

struct Encoding {
  Matrix hidden;
  Matrix sentences;
  EncodedDocument input;
};

Encoding encode(const Document& doc, const EncoderParams& params, const Vocabulary& vocab,
                const EncoderConfig& config);

}  // namespace aqe
