#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/decoder.hpp"
#include "aqe/encoder.hpp"
#include "aqe/quadtag.hpp"
#include "aqe/template_codec.hpp"

namespace aqe {

/// Which losses are optimized, and which head produces predictions.
enum class TrainMode { Joint, GenOnly, TagOnly };

std::string_view train_mode_name(TrainMode mode);
std::optional<TrainMode> train_mode_from_name(std::string_view name);

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t proj = 32;
  std::size_t max_input_len = 512;
  std::size_t max_output_len = 512;
  int n_max = 8;
  TemplateKind kind = TemplateKind::Default;
  TrainMode mode = TrainMode::Joint;
};

struct ModelParams {
  EncoderParams encoder;
  BiaffineParams biaffine;
  DecoderParams decoder;

  ModelParams() = default;
  ModelParams(const ModelConfig& config, std::size_t input_vocab, std::size_t output_vocab);
  void visit(const nn::TensorVisitor& f);
  void visit(const nn::ConstTensorVisitor& f) const;
  void init(Rng& rng);
  void zero();
};

struct Model {
  ModelConfig config;
  Vocabulary vocab;
  DecoderVocab target_vocab;
  ModelParams params;

  EncoderConfig encoder_config() const { return {config.dim, config.heads, config.max_input_len}; }
  DecoderConfig decoder_config() const { return {config.heads, config.max_output_len}; }
};

/// Builds the output vocabulary from the config and draws initial weights from seed.
Model make_model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);

/// Positive cells plus sampled negatives, sorted.
EntrySet training_entries(const TagTable& gold, double eta, std::uint64_t seed);

struct StepLosses {
  double generation = 0.0;  // L_g
  double tagging = 0.0;     // L_a
};

/// Losses of one document; a disabled head contributes 0.
StepLosses forward_losses(const Model& model, const Document& doc, const EntrySet& entries,
                          bool use_generation, bool use_tagging);

/// Same losses, with gradients accumulated into grads.
StepLosses forward_backward(const Model& model, const Document& doc, const EntrySet& entries,
                            bool use_generation, bool use_tagging, ModelParams& grads);

struct Prediction {
  std::string text;  // decoded or serialized template string
  QuadSet quads;
  std::size_t warnings = 0;
};

Prediction predict_generative(const Model& model, const Document& doc);
Prediction predict_tagging(const Model& model, const Document& doc);
/// Tag-only models predict from the table, the others by generation.
Prediction predict(const Model& model, const Document& doc);
/// Documents are decoded in parallel.
std::vector<Prediction> predict_corpus(const Model& model, const std::vector<Document>& docs);
std::vector<Prediction> predict_corpus(const Model& model, const std::vector<Document>& docs,
                                       TrainMode route);

}  // namespace aqe
