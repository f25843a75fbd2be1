#include "aqe/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aqe/error.hpp"
#include "aqe/kernels.hpp"

namespace aqe {

namespace {
std::string id_token(int i) { return "#" + std::to_string(i); }
}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, int n_max) : n_max_(n_max) {
  for (const std::string& t : tokens) add(t);
  if (size() != tokens.size()) throw ValidationError("vocabulary contains duplicate tokens");
  const std::array<std::string_view, 4> reserved = {kPadToken, kUnkToken, kSentenceStart, kSentenceEnd};
  for (std::size_t i = 0; i < reserved.size(); ++i) {
    if (tokens_.size() <= i || tokens_[i] != reserved[i]) {
      throw ValidationError("vocabulary is missing reserved token " + std::string(reserved[i]));
    }
  }
  for (int i = 0; i <= n_max; ++i) {
    if (!contains(id_token(i))) throw ValidationError("vocabulary is missing " + id_token(i));
  }
}

void Vocabulary::add(const std::string& token) {
  if (lookup_.count(token)) return;
  lookup_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

int Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  return it == lookup_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const std::vector<Document>& corpus, int n_max) {
  Vocabulary vocab;
  vocab.n_max_ = n_max;
  vocab.add(std::string(kPadToken));
  vocab.add(std::string(kUnkToken));
  vocab.add(std::string(kSentenceStart));
  vocab.add(std::string(kSentenceEnd));
  for (int i = 0; i <= n_max; ++i) vocab.add(id_token(i));

  std::map<std::string, std::size_t> counts;
  for (const Document& doc : corpus) {
    for (const std::string& t : doc.topic.tokens) ++counts[t];
    for (const Sentence& s : doc.body) {
      for (const std::string& t : s.tokens) ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [token, count] : ranked) vocab.add(token);
  return vocab;
}

std::vector<std::string> reformulate_input(const Document& doc) {
  std::vector<std::string> out;
  auto append = [&out](const Sentence& s) {
    out.emplace_back(kSentenceStart);
    out.push_back(id_token(s.id));
    out.insert(out.end(), s.tokens.begin(), s.tokens.end());
    out.emplace_back(kSentenceEnd);
  };
  append(doc.topic);
  for (const Sentence& s : doc.body) append(s);
  return out;
}

EncodedDocument encode_tokens(const Document& doc, const Vocabulary& vocab, std::size_t max_len) {
  const std::vector<std::string> tokens = reformulate_input(doc);
  if (tokens.size() > max_len) {
    throw Error("document " + doc.doc_id + " has " + std::to_string(tokens.size()) +
                " input tokens, above the maximum of " + std::to_string(max_len));
  }
  EncodedDocument enc;
  enc.token_ids.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == kSentenceStart) enc.ss_positions.push_back(i);
    enc.token_ids.push_back(vocab.index(tokens[i]));
  }
  return enc;
}

EncoderParams::EncoderParams(std::size_t vocab_size, std::size_t dim)
    : embedding(vocab_size, dim), attention(dim), ffn(dim, 4 * dim) {}

void EncoderParams::visit(const nn::TensorVisitor& f) {
  f("encoder.embedding", embedding);
  attention.visit("encoder.attention", f);
  ffn.visit("encoder.ffn", f);
}

void EncoderParams::visit(const nn::ConstTensorVisitor& f) const {
  f("encoder.embedding", embedding);
  attention.visit("encoder.attention", f);
  ffn.visit("encoder.ffn", f);
}

void EncoderParams::init(Rng& rng) {
  const double dim = static_cast<double>(embedding.cols());
  nn::init_normal(embedding, rng, 1.0);
  for (Matrix* m : {&attention.wq, &attention.wk, &attention.wv, &attention.wo}) {
    nn::init_normal(*m, rng, 1.0 / std::sqrt(dim));
  }
  nn::init_normal(ffn.w1, rng, 1.0 / std::sqrt(dim));
  nn::init_normal(ffn.w2, rng, 1.0 / std::sqrt(static_cast<double>(ffn.w2.rows())));
  ffn.b1.fill(0.0);
  ffn.b2.fill(0.0);
}

EncoderState encoder_forward(const EncoderParams& params, const EncoderConfig& config,
                             const EncodedDocument& input) {
  const std::size_t length = input.token_ids.size();
  const std::size_t dim = params.embedding.cols();
  if (length > config.max_len) throw Error("encoder input exceeds maximum length");
  EncoderState st;
  st.input = input;
  st.x0.resize(length, dim);
  for (std::size_t t = 0; t < length; ++t) {
    const auto src = params.embedding.row(static_cast<std::size_t>(input.token_ids[t]));
    std::copy(src.begin(), src.end(), st.x0.row(t).begin());
  }
  st.x_pos = nn::positional_encoding(length, dim);
  nn::add_in_place(st.x_pos, st.x0);

  st.x1 = nn::attention_forward(params.attention, config.heads, st.x_pos, st.x_pos, st.x0, false,
                                st.attention);
  nn::add_in_place(st.x1, st.x0);
  st.hidden = nn::feed_forward(params.ffn, st.x1, st.ffn);
  nn::add_in_place(st.hidden, st.x1);
  return st;
}

void encoder_backward(const EncoderParams& params, EncoderParams& grads, const EncoderState& state,
                      const Matrix& d_hidden) {
  const std::size_t length = state.x0.rows();
  const std::size_t dim = state.x0.cols();
  Matrix d_x1 = d_hidden;
  nn::feed_forward_backward(params.ffn, grads.ffn, state.ffn, d_hidden, d_x1);

  Matrix d_x0 = d_x1;
  Matrix d_pos(length, dim);
  // Query and key inputs are the same tensor; both paths land in d_pos.
  Matrix d_key(length, dim);
  nn::attention_backward(params.attention, grads.attention, state.attention, d_x1, d_pos, d_key,
                         d_x0);
  nn::add_in_place(d_x0, d_pos);
  nn::add_in_place(d_x0, d_key);
  for (std::size_t t = 0; t < length; ++t) {
    auto dst = grads.embedding.row(static_cast<std::size_t>(state.input.token_ids[t]));
    const auto src = d_x0.row(t);
    for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
  }
}

Matrix sentence_embeddings(const Matrix& hidden, const std::vector<std::size_t>& ss_positions) {
  Matrix out(ss_positions.size(), hidden.cols());
  for (std::size_t i = 0; i < ss_positions.size(); ++i) {
    const auto src = hidden.row(ss_positions[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Encoding encode(const Document& doc, const EncoderParams& params, const Vocabulary& vocab,
                const EncoderConfig& config) {
  EncodedDocument input = encode_tokens(doc, vocab, config.max_len);
  EncoderState st = encoder_forward(params, config, input);
  Encoding out;
  out.sentences = sentence_embeddings(st.hidden, input.ss_positions);
  out.hidden = std::move(st.hidden);
  out.input = std::move(input);
  return out;
}

}  // namespace aqe
