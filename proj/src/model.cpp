#include "aqe/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iterator>

#include "aqe/error.hpp"

namespace aqe {

std::string_view train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Joint: return "joint";
    case TrainMode::GenOnly: return "gen-only";
    case TrainMode::TagOnly: return "tag-only";
  }
  return "joint";
}

std::optional<TrainMode> train_mode_from_name(std::string_view name) {
  for (TrainMode m : {TrainMode::Joint, TrainMode::GenOnly, TrainMode::TagOnly}) {
    if (train_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

ModelParams::ModelParams(const ModelConfig& config, std::size_t input_vocab, std::size_t output_vocab)
    : encoder(input_vocab, config.dim),
      biaffine(config.dim, config.proj),
      decoder(output_vocab, config.dim) {}

void ModelParams::visit(const nn::TensorVisitor& f) {
  encoder.visit(f);
  biaffine.visit(f);
  decoder.visit(f);
}

void ModelParams::visit(const nn::ConstTensorVisitor& f) const {
  encoder.visit(f);
  biaffine.visit(f);
  decoder.visit(f);
}

void ModelParams::init(Rng& rng) {
  encoder.init(rng);
  biaffine.init(rng);
  decoder.init(rng);
}

void ModelParams::zero() {
  visit([](const std::string&, Matrix& m) { m.fill(0.0); });
}

Model make_model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed) {
  if (config.dim == 0 || config.proj == 0) throw ValidationError("model dimensions must be positive");
  if (config.heads == 0 || config.dim % config.heads != 0) {
    throw ValidationError("heads must divide the model dimension");
  }
  if (vocab.n_max() < config.n_max) throw ValidationError("vocabulary covers fewer sentence ids than n_max");
  Model model;
  model.config = config;
  model.vocab = std::move(vocab);
  model.target_vocab = DecoderVocab(config.n_max, config.kind);
  model.params = ModelParams(config, model.vocab.size(), model.target_vocab.size());
  Rng rng(seed);
  model.params.init(rng);
  return model;
}

EntrySet training_entries(const TagTable& gold, double eta, std::uint64_t seed) {
  const EntrySet pos = positive_entries(gold);
  const EntrySet neg = sample_negatives(gold, eta, seed);
  EntrySet out;
  out.reserve(pos.size() + neg.size());
  std::merge(pos.begin(), pos.end(), neg.begin(), neg.end(), std::back_inserter(out));
  return out;
}

namespace {

void check_document(const Model& model, const Document& doc) {
  if (doc.n() > model.config.n_max) {
    throw Error("document " + doc.doc_id + " has " + std::to_string(doc.n()) +
                " sentences, model supports " + std::to_string(model.config.n_max));
  }
}

}  // namespace

StepLosses forward_losses(const Model& model, const Document& doc, const EntrySet& entries,
                          bool use_generation, bool use_tagging) {
  check_document(model, doc);
  const EncodedDocument input = encode_tokens(doc, model.vocab, model.config.max_input_len);
  const EncoderState enc = encoder_forward(model.params.encoder, model.encoder_config(), input);
  StepLosses out;
  if (use_tagging) {
    const Matrix sentences = sentence_embeddings(enc.hidden, input.ss_positions);
    const TagTable gold = build_gold_table(doc.gold, doc.n());
    std::vector<LabelDistribution> probs;
    std::vector<TagLabel> labels;
    for (const Cell& c : entries) {
      probs.push_back(biaffine_scores(sentences, model.params.biaffine, c.row, c.col));
      labels.push_back(gold.at(c.row, c.col));
    }
    out.tagging = tagging_loss(probs, labels);
  }
  if (use_generation) {
    const std::vector<int> targets = model.target_vocab.target(doc.gold);
    const DecoderState st =
        decoder_forward(model.params.decoder, model.decoder_config(), enc.hidden, shift_right(targets));
    out.generation = generation_loss(targets, st.probs);
  }
  return out;
}

StepLosses forward_backward(const Model& model, const Document& doc, const EntrySet& entries,
                            bool use_generation, bool use_tagging, ModelParams& grads) {
  check_document(model, doc);
  const EncodedDocument input = encode_tokens(doc, model.vocab, model.config.max_input_len);
  const EncoderState enc = encoder_forward(model.params.encoder, model.encoder_config(), input);
  Matrix d_hidden(enc.hidden.rows(), enc.hidden.cols());
  StepLosses out;
  if (use_tagging) {
    const Matrix sentences = sentence_embeddings(enc.hidden, input.ss_positions);
    const TagTable gold = build_gold_table(doc.gold, doc.n());
    Matrix d_sentences(sentences.rows(), sentences.cols());
    out.tagging = biaffine_loss_backward(sentences, model.params.biaffine, entries, gold,
                                         grads.biaffine, d_sentences);
    for (std::size_t i = 0; i < input.ss_positions.size(); ++i) {
      auto dst = d_hidden.row(input.ss_positions[i]);
      const auto src = d_sentences.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  }
  if (use_generation) {
    const std::vector<int> targets = model.target_vocab.target(doc.gold);
    const DecoderState st =
        decoder_forward(model.params.decoder, model.decoder_config(), enc.hidden, shift_right(targets));
    out.generation = decoder_loss_backward(model.params.decoder, grads.decoder, st, targets, d_hidden);
  }
  encoder_backward(model.params.encoder, grads.encoder, enc, d_hidden);
  return out;
}

Prediction predict_generative(const Model& model, const Document& doc) {
  const Encoding enc = encode(doc, model.params.encoder, model.vocab, model.encoder_config());
  const std::vector<int> ids =
      greedy_decode(enc.hidden, model.params.decoder, model.decoder_config(), model.config.max_output_len);
  Prediction out;
  out.text = model.target_vocab.detokenize(ids);
  ParseOutcome parsed = parse_quads(out.text, model.config.kind, doc.n());
  out.quads = std::move(parsed.quads);
  out.warnings = parsed.warnings.size();
  return out;
}

Prediction predict_tagging(const Model& model, const Document& doc) {
  const Encoding enc = encode(doc, model.params.encoder, model.vocab, model.encoder_config());
  Prediction out;
  out.quads = decode_table(score_table(enc.sentences, model.params.biaffine));
  out.text = serialize(out.quads, model.config.kind);
  return out;
}

Prediction predict(const Model& model, const Document& doc) {
  return model.config.mode == TrainMode::TagOnly ? predict_tagging(model, doc)
                                                 : predict_generative(model, doc);
}

std::vector<Prediction> predict_corpus(const Model& model, const std::vector<Document>& docs) {
  return predict_corpus(model, docs, model.config.mode);
}

std::vector<Prediction> predict_corpus(const Model& model, const std::vector<Document>& docs,
                                       TrainMode route) {
  std::vector<Prediction> out(docs.size());
  const auto count = static_cast<std::ptrdiff_t>(docs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const Document& doc = docs[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] =
          route == TrainMode::TagOnly ? predict_tagging(model, doc) : predict_generative(model, doc);
    } catch (...) {
#pragma omp critical(aqe_predict_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace aqe
