#include "aqe/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "aqe/error.hpp"
#include "aqe/kernels.hpp"

namespace aqe {

DecoderVocab::DecoderVocab(int n_max, TemplateKind kind) : n_max_(n_max), kind_(kind) {
  if (n_max < 1) throw std::invalid_argument("decoder vocabulary needs n_max >= 1");
  std::vector<std::string> tokens = {"<PAD>", "<BOS>", "<EOS>"};
  for (int i = 1; i <= n_max; ++i) tokens.push_back("#" + std::to_string(i));
  if (kind == TemplateKind::Prompt) {
    for (const char* label : {"Claim Index:", "Stance:", "Evidence Index:", "Evidence Type:"}) {
      tokens.emplace_back(label);
    }
  }
  for (Stance s : kStances) tokens.emplace_back(stance_phrase(s, kind));
  for (EvidenceType t : kEvidenceTypes) tokens.emplace_back(display_name(t));
  if (groups_by_claim(kind)) {
    tokens.emplace_back(":");
    tokens.emplace_back("|");
  } else {
    tokens.emplace_back(",");
  }
  tokens.emplace_back("[SEP]");
  for (const std::string& t : tokens) {
    lookup_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
    longest_ = std::max(longest_, t.size());
  }
}

std::vector<int> DecoderVocab::tokenize(std::string_view text) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ') {
      ++i;
      continue;
    }
    bool matched = false;
    for (std::size_t len = std::min(longest_, text.size() - i); len > 0; --len) {
      auto it = lookup_.find(std::string(text.substr(i, len)));
      if (it == lookup_.end() || it->second <= kEos) continue;
      const std::size_t end = i + len;
      const bool boundary = end == text.size() || text[end] == ' ' || text[end] == ',' ||
                            it->first == ",";
      if (!boundary) continue;
      ids.push_back(it->second);
      i = end;
      matched = true;
      break;
    }
    if (!matched) {
      throw Error("cannot tokenize template text at offset " + std::to_string(i) + ": \"" +
                  std::string(text.substr(i, 20)) + "\"");
    }
  }
  return ids;
}

std::string DecoderVocab::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id <= kEos || id >= static_cast<int>(tokens_.size())) continue;
    const std::string& tok = tokens_[static_cast<std::size_t>(id)];
    if (tok == ",") {
      out += ',';
      continue;
    }
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::vector<int> DecoderVocab::target(const QuadSet& quads) const {
  std::vector<int> ids = tokenize(serialize(quads, kind_));
  ids.push_back(kEos);
  return ids;
}

DecoderParams::DecoderParams(std::size_t vocab_size, std::size_t dim)
    : embedding(vocab_size, dim),
      self_attention(dim),
      cross_attention(dim),
      ffn(dim, 4 * dim),
      output(dim, vocab_size) {}

void DecoderParams::visit(const nn::TensorVisitor& f) {
  f("decoder.embedding", embedding);
  self_attention.visit("decoder.self_attention", f);
  cross_attention.visit("decoder.cross_attention", f);
  ffn.visit("decoder.ffn", f);
  f("decoder.output", output);
}

void DecoderParams::visit(const nn::ConstTensorVisitor& f) const {
  f("decoder.embedding", embedding);
  self_attention.visit("decoder.self_attention", f);
  cross_attention.visit("decoder.cross_attention", f);
  ffn.visit("decoder.ffn", f);
  f("decoder.output", output);
}

void DecoderParams::init(Rng& rng) {
  const double dim = static_cast<double>(embedding.cols());
  nn::init_normal(embedding, rng, 1.0);
  for (nn::AttentionParams* a : {&self_attention, &cross_attention}) {
    for (Matrix* m : {&a->wq, &a->wk, &a->wv, &a->wo}) nn::init_normal(*m, rng, 1.0 / std::sqrt(dim));
  }
  nn::init_normal(ffn.w1, rng, 1.0 / std::sqrt(dim));
  nn::init_normal(ffn.w2, rng, 1.0 / std::sqrt(static_cast<double>(ffn.w2.rows())));
  ffn.b1.fill(0.0);
  ffn.b2.fill(0.0);
  nn::init_normal(output, rng, 0.1 / std::sqrt(dim));
}

namespace {

Matrix gather_rows(const Matrix& table, const std::vector<int>& ids) {
  Matrix out(ids.size(), table.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto src = table.row(static_cast<std::size_t>(ids[t]));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

Matrix with_positions(const Matrix& x) {
  Matrix out = nn::positional_encoding(x.rows(), x.cols());
  nn::add_in_place(out, x);
  return out;
}

}  // namespace

DecoderState decoder_forward(const DecoderParams& params, const DecoderConfig& config,
                             const Matrix& hidden, const std::vector<int>& inputs) {
  DecoderState st;
  st.inputs = inputs;
  st.z0 = gather_rows(params.embedding, inputs);
  st.z0_pos = with_positions(st.z0);
  st.z1 = nn::attention_forward(params.self_attention, config.heads, st.z0_pos, st.z0_pos, st.z0,
                                true, st.self_attention);
  nn::add_in_place(st.z1, st.z0);
  st.z1_pos = with_positions(st.z1);
  st.memory_keys = with_positions(hidden);
  st.z2 = nn::attention_forward(params.cross_attention, config.heads, st.z1_pos, st.memory_keys,
                                hidden, false, st.cross_attention);
  nn::add_in_place(st.z2, st.z1);
  st.z3 = nn::feed_forward(params.ffn, st.z2, st.ffn);
  nn::add_in_place(st.z3, st.z2);
  st.probs = kernels::matmul(st.z3, params.output);
  kernels::softmax_rows(st.probs);
  return st;
}

double decoder_loss_backward(const DecoderParams& params, DecoderParams& grads,
                             const DecoderState& state, const std::vector<int>& targets,
                             Matrix& d_hidden) {
  const std::size_t steps = state.inputs.size();
  const std::size_t dim = params.embedding.cols();
  if (targets.size() != steps) throw std::invalid_argument("decoder: target length mismatch");
  double loss = generation_loss(targets, state.probs);

  Matrix d_logits = state.probs;
  for (std::size_t t = 0; t < steps; ++t) d_logits(t, static_cast<std::size_t>(targets[t])) -= 1.0;
  kernels::gemm(grads.output, state.z3, kernels::Trans::Yes, d_logits, kernels::Trans::No, true);
  const Matrix d_z3 = kernels::matmul_nt(d_logits, params.output);

  Matrix d_z2 = d_z3;
  nn::feed_forward_backward(params.ffn, grads.ffn, state.ffn, d_z3, d_z2);

  Matrix d_z1 = d_z2;
  Matrix d_query(steps, dim);
  Matrix d_keys(d_hidden.rows(), dim);
  nn::attention_backward(params.cross_attention, grads.cross_attention, state.cross_attention, d_z2,
                         d_query, d_keys, d_hidden);
  nn::add_in_place(d_hidden, d_keys);
  nn::add_in_place(d_z1, d_query);

  Matrix d_z0 = d_z1;
  Matrix d_q0(steps, dim), d_k0(steps, dim);
  nn::attention_backward(params.self_attention, grads.self_attention, state.self_attention, d_z1,
                         d_q0, d_k0, d_z0);
  nn::add_in_place(d_z0, d_q0);
  nn::add_in_place(d_z0, d_k0);
  for (std::size_t t = 0; t < steps; ++t) {
    auto dst = grads.embedding.row(static_cast<std::size_t>(state.inputs[t]));
    const auto src = d_z0.row(t);
    for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
  }
  return loss;
}

std::vector<int> shift_right(const std::vector<int>& targets) {
  std::vector<int> inputs;
  inputs.reserve(targets.size());
  inputs.push_back(DecoderVocab::kBos);
  for (std::size_t t = 0; t + 1 < targets.size(); ++t) inputs.push_back(targets[t]);
  return inputs;
}

double generation_loss(const std::vector<int>& targets, const Matrix& probs) {
  if (targets.size() != probs.rows()) throw std::invalid_argument("generation_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double total = 0.0;
    for (double v : probs.row(t)) total += v;
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("generation_loss: row not normalized");
    const auto y = static_cast<std::size_t>(targets[t]);
    if (y >= probs.cols()) throw std::invalid_argument("generation_loss: target outside vocabulary");
    loss -= std::log(probs(t, y));
  }
  return loss;
}

namespace {

/// Cached-state decoder producing one logits row per step.
class IncrementalDecoder {
 public:
  IncrementalDecoder(const Matrix& hidden, const DecoderParams& params, const DecoderConfig& config)
      : params_(params), heads_(config.heads), dim_(params.embedding.cols()) {
    const Matrix keys_in = with_positions(hidden);
    mem_k_ = kernels::matmul(keys_in, params.cross_attention.wk);
    mem_v_ = kernels::matmul(hidden, params.cross_attention.wv);
  }

  std::vector<double> step(int token) {
    const std::size_t t = keys_.size();
    const std::vector<double> z0(params_.embedding.row(static_cast<std::size_t>(token)).begin(),
                                 params_.embedding.row(static_cast<std::size_t>(token)).end());
    std::vector<double> z0_pos = z0;
    add_position(z0_pos, t);

    keys_.push_back(row_times(z0_pos, params_.self_attention.wk));
    values_.push_back(row_times(z0, params_.self_attention.wv));
    const std::vector<double> q = row_times(z0_pos, params_.self_attention.wq);
    std::vector<double> z1 = z0;
    add(z1, row_times(attend(q, keys_, values_), params_.self_attention.wo));

    std::vector<double> z1_pos = z1;
    add_position(z1_pos, t);
    const std::vector<double> qc = row_times(z1_pos, params_.cross_attention.wq);
    std::vector<double> z2 = z1;
    add(z2, row_times(attend_memory(qc), params_.cross_attention.wo));

    std::vector<double> hidden = row_times(z2, params_.ffn.w1);
    for (std::size_t c = 0; c < hidden.size(); ++c) hidden[c] = nn::gelu(hidden[c] + params_.ffn.b1(0, c));
    std::vector<double> z3 = row_times(hidden, params_.ffn.w2);
    for (std::size_t c = 0; c < dim_; ++c) z3[c] += params_.ffn.b2(0, c) + z2[c];
    return row_times(z3, params_.output);
  }

 private:
  static std::vector<double> row_times(const std::vector<double>& x, const Matrix& w) {
    std::vector<double> out(w.cols(), 0.0);
    for (std::size_t p = 0; p < x.size(); ++p) {
      const double xv = x[p];
      if (xv == 0.0) continue;
      const auto wrow = w.row(p);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += xv * wrow[j];
    }
    return out;
  }

  static void add(std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  void add_position(std::vector<double>& x, std::size_t pos) const {
    nn::add_position(x, pos);
  }

  std::vector<double> attend(const std::vector<double>& q, const std::vector<std::vector<double>>& keys,
                             const std::vector<std::vector<double>>& values) const {
    const std::size_t dh = dim_ / heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> ctx(dim_, 0.0);
    std::vector<double> w(keys.size());
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::size_t c0 = h * dh;
      double peak = -INFINITY;
      for (std::size_t j = 0; j < keys.size(); ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[c0 + c] * keys[j][c0 + c];
        w[j] = s * scale;
        peak = std::max(peak, w[j]);
      }
      double total = 0.0;
      for (double& v : w) {
        v = std::exp(v - peak);
        total += v;
      }
      for (std::size_t j = 0; j < keys.size(); ++j) {
        const double a = w[j] / total;
        for (std::size_t c = 0; c < dh; ++c) ctx[c0 + c] += a * values[j][c0 + c];
      }
    }
    return ctx;
  }

  std::vector<double> attend_memory(const std::vector<double>& q) const {
    const std::size_t dh = dim_ / heads_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t length = mem_k_.rows();
    std::vector<double> ctx(dim_, 0.0);
    std::vector<double> w(length);
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::size_t c0 = h * dh;
      double peak = -INFINITY;
      for (std::size_t j = 0; j < length; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[c0 + c] * mem_k_(j, c0 + c);
        w[j] = s * scale;
        peak = std::max(peak, w[j]);
      }
      double total = 0.0;
      for (double& v : w) {
        v = std::exp(v - peak);
        total += v;
      }
      for (std::size_t j = 0; j < length; ++j) {
        const double a = w[j] / total;
        for (std::size_t c = 0; c < dh; ++c) ctx[c0 + c] += a * mem_v_(j, c0 + c);
      }
    }
    return ctx;
  }

  const DecoderParams& params_;
  std::size_t heads_;
  std::size_t dim_;
  Matrix mem_k_, mem_v_;
  std::vector<std::vector<double>> keys_, values_;
};

}  // namespace

std::vector<int> greedy_decode(const Matrix& hidden, const DecoderParams& params,
                               const DecoderConfig& config, std::size_t max_len) {
  IncrementalDecoder dec(hidden, params, config);
  std::vector<int> out;
  int token = DecoderVocab::kBos;
  while (out.size() < max_len) {
    const std::vector<double> logits = dec.step(token);
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
      if (logits[k] > logits[best]) best = k;
    }
    token = static_cast<int>(best);
    if (token == DecoderVocab::kEos) break;
    out.push_back(token);
  }
  return out;
}

Matrix incremental_logits(const Matrix& hidden, const DecoderParams& params,
                          const DecoderConfig& config, const std::vector<int>& inputs) {
  IncrementalDecoder dec(hidden, params, config);
  Matrix out(inputs.size(), params.output.cols());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const std::vector<double> row = dec.step(inputs[t]);
    std::copy(row.begin(), row.end(), out.row(t).begin());
  }
  return out;
}

}  // namespace aqe
