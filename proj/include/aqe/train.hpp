#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/corpus.hpp"
#include "aqe/eval.hpp"
#include "aqe/model.hpp"

namespace aqe {

/// Replaces one gold component during training: every stance becomes Support,
/// or every type becomes Others.
enum class DummyMode { None, Stance, Type };

std::string_view dummy_mode_name(DummyMode mode);
std::optional<DummyMode> dummy_mode_from_name(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-2;
  double eta = 5.0;
  std::uint64_t seed = 7;
  std::size_t dim = 64;
  std::size_t proj = 32;
  std::size_t heads = 4;
  std::size_t max_len = 512;
  std::size_t max_output_len = 512;
  TemplateKind kind = TemplateKind::Default;
  TrainMode mode = TrainMode::Joint;
  DummyMode dummy = DummyMode::None;
  double clip_norm = 25.0;         // global gradient norm cap, 0 = off
  std::size_t eval_every = 1;      // epochs between selection evaluations
  std::optional<double> target_f1;  // stop once the selection F1 reaches this

  /// Throws ValidationError.
  void validate() const;
};

/// Flat "key = value" lines; '#' starts a comment. Unknown keys are errors.
TrainConfig read_train_config(std::istream& in);
TrainConfig load_train_config(const std::string& path);
std::string format_train_config(const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double generation = 0.0;  // mean L_g per document
  double tagging = 0.0;     // mean L_a per document
  double loss = 0.0;        // joint_loss(generation, tagging)
  std::optional<double> dev_f1;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0.0;

  /// One line per epoch plus a closing summary line.
  std::string report(bool with_timing = true) const;
};

double joint_loss(double lg, double la);

std::vector<Document> apply_dummy(const std::vector<Document>& docs, DummyMode mode);

struct TrainResult {
  Model model;  // best selection checkpoint
  TrainLog log;
};

/// Batch size 1 SGD over train; the checkpoint with the best quad F1 on dev
/// (or on train when dev is empty) is returned. Throws Error on a non-finite loss.
TrainResult train_model(const std::vector<Document>& train, const std::vector<Document>& dev,
                        const TrainConfig& config,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

/// Quad F1 of a model on a corpus through the given prediction route.
MatchReport evaluate(const Model& model, const std::vector<Document>& docs, TrainMode route);

/// Gradient descent on the given loss terms; returns the pre-clip global norm.
double sgd_step(ModelParams& params, ModelParams& grads, double learning_rate, double clip_norm);

enum class GradComponent { Encoder, Biaffine, Decoder };

std::string_view grad_component_name(GradComponent c);
std::optional<GradComponent> grad_component_from_name(std::string_view name);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Central differences of the joint loss against backprop for every scalar of
/// one component, on a tiny model (d = 8, p = 4). Relative error is
/// |a - n| / max(|a|, |n|, kGradCheckFloor).
inline constexpr double kGradCheckFloor = 1e-4;
GradCheckResult grad_check(GradComponent component, double epsilon, std::uint64_t seed = 1,
                           bool zero_params = false);

struct GridRow {
  double eta = 0.0;
  MatchReport report;
};

/// Trains one model per eta (in parallel) with the shared config and seed and
/// scores each on dev.
std::vector<GridRow> eta_grid_search(const std::vector<Document>& train, const std::vector<Document>& dev,
                                     const std::vector<double>& etas, const TrainConfig& config);

std::string format_grid(const std::vector<GridRow>& rows);

}  // namespace aqe
