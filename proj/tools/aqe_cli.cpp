#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqe/checkpoint.hpp"
#include "aqe/corpus.hpp"
#include "aqe/error.hpp"
#include "aqe/eval.hpp"
#include "aqe/template_codec.hpp"
#include "aqe/train.hpp"

namespace {

using namespace aqe;

std::string grouped(std::size_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

template <typename T>
std::map<std::string, T> name_map(const auto& values, auto namer) {
  std::map<std::string, T> out;
  for (T v : values) out.emplace(std::string(namer(v)), v);
  return out;
}

const std::map<std::string, TemplateKind> kTemplates =
    name_map<TemplateKind>(kTemplateKinds, template_kind_name);
const std::map<std::string, TrainMode> kModes = name_map<TrainMode>(
    std::array{TrainMode::Joint, TrainMode::GenOnly, TrainMode::TagOnly}, train_mode_name);
const std::map<std::string, DummyMode> kDummies = name_map<DummyMode>(
    std::array{DummyMode::None, DummyMode::Stance, DummyMode::Type}, dummy_mode_name);
const std::map<std::string, Projection> kProjections = name_map<Projection>(kBreakdownOrder, projection_name);

struct TrainFlags {
  std::string config_path;
  std::optional<std::size_t> epochs, dim, proj, heads, max_len, eval_every;
  std::optional<double> lr, eta, clip, target_f1;
  std::optional<std::uint64_t> seed;
  std::optional<TemplateKind> kind;
  std::optional<TrainMode> mode;
  std::optional<DummyMode> dummy;

  void attach(CLI::App* app, bool with_eta) {
    app->add_option("--config", config_path, "flat key = value training config")->check(CLI::ExistingFile);
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr, "learning rate");
    if (with_eta) app->add_option("--eta", eta, "negative sampling ratio");
    app->add_option("--seed", seed);
    app->add_option("--dim", dim, "model width d");
    app->add_option("--proj", proj, "biaffine projection p");
    app->add_option("--heads", heads);
    app->add_option("--max-len", max_len, "encoder input limit");
    app->add_option("--template", kind)->transform(CLI::CheckedTransformer(kTemplates));
    app->add_option("--mode", mode)->transform(CLI::CheckedTransformer(kModes));
    app->add_option("--dummy", dummy)->transform(CLI::CheckedTransformer(kDummies));
    app->add_option("--clip", clip, "gradient norm cap, 0 disables");
    app->add_option("--eval-every", eval_every);
    app->add_option("--target-f1", target_f1, "stop once selection F1 reaches this");
  }

  TrainConfig resolve() const {
    TrainConfig c = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
    if (epochs) c.epochs = *epochs;
    if (dim) c.dim = *dim;
    if (proj) c.proj = *proj;
    if (heads) c.heads = *heads;
    if (max_len) c.max_len = *max_len;
    if (eval_every) c.eval_every = *eval_every;
    if (lr) c.learning_rate = *lr;
    if (eta) c.eta = *eta;
    if (clip) c.clip_norm = *clip;
    if (target_f1) c.target_f1 = *target_f1;
    if (seed) c.seed = *seed;
    if (kind) c.kind = *kind;
    if (mode) c.mode = *mode;
    if (dummy) c.dummy = *dummy;
    c.validate();
    return c;
  }
};

std::vector<Document> load_optional(const std::string& path) {
  return path.empty() ? std::vector<Document>{} : load_corpus(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Argument quadruplet extraction toolkit"};
  app.require_subcommand(1);

  std::string data, out, gold, pred, dev, model_path, log_path;
  std::uint64_t seed = 7;

  auto* ingest = app.add_subcommand("ingest", "validate a corpus and rewrite it canonically");
  ingest->add_option("--data", data)->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out)->required();

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("--data", data)->required()->check(CLI::ExistingFile);

  std::vector<double> ratios = {0.8, 0.1, 0.1};
  auto* split = app.add_subcommand("split", "document-level train/dev/test split");
  split->add_option("--data", data)->required()->check(CLI::ExistingFile);
  split->add_option("--out", out, "output directory")->required()->check(CLI::ExistingDirectory);
  split->add_option("--ratios", ratios, "train,dev,test")->delimiter(',')->expected(3);
  split->add_option("--seed", seed);

  SynthConfig synth_config;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  synth->add_option("--out", out)->required();
  synth->add_option("--n", synth_config.n_docs, "documents");
  synth->add_option("--max-sentences", synth_config.max_sentences);
  synth->add_option("--vocab", synth_config.vocab_size, "filler vocabulary size");
  synth->add_option("--quads", synth_config.quads_per_doc, "quadruplets per document");
  synth->add_option("--seed", synth_config.seed);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--data", data, "training corpus")->required()->check(CLI::ExistingFile);
  train->add_option("--dev", dev, "selection corpus")->check(CLI::ExistingFile);
  train->add_option("--model", model_path, "checkpoint to write")->required();
  train->add_option("--log", log_path, "write the epoch report here");
  train_flags.attach(train, true);

  std::optional<TrainMode> route;
  auto* predict_cmd = app.add_subcommand("predict", "decode a corpus into a prediction file");
  predict_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", out)->required();
  predict_cmd->add_option("--mode", route, "decode route, defaults to the model's")
      ->transform(CLI::CheckedTransformer(kModes));

  TemplateKind kind = TemplateKind::Default;
  std::optional<Projection> proj;
  auto* score = app.add_subcommand("score", "score a prediction file against a corpus");
  score->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
  score->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  score->add_option("--template", kind)->transform(CLI::CheckedTransformer(kTemplates));
  score->add_option("--proj", proj, "single projection; omit for the full breakdown")
      ->transform(CLI::CheckedTransformer(kProjections));

  std::vector<double> etas = {1, 3, 5, 10};
  TrainFlags grid_flags;
  auto* grid = app.add_subcommand("gridsearch", "negative sampling ratio search");
  grid->add_option("--data", data, "training corpus")->required()->check(CLI::ExistingFile);
  grid->add_option("--dev", dev, "evaluation corpus")->check(CLI::ExistingFile);
  grid->add_option("--etas", etas)->delimiter(',');
  grid_flags.attach(grid, false);

  std::size_t rounds = 1000;
  auto* roundtrip = app.add_subcommand("roundtrip", "template serialize/parse property run");
  roundtrip->add_option("--n", rounds, "random quadruplet sets");
  roundtrip->add_option("--seed", seed);

  std::string component = "all";
  double epsilon = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--component", component)
      ->check(CLI::IsMember({"all", "encoder", "biaffine", "decoder"}));
  gradcheck->add_option("--eps", epsilon);
  gradcheck->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto docs = load_corpus(data);
      save_corpus(out, docs);
      std::cout << docs.size() << " documents ingested\n";
    } else if (*stats) {
      const CorpusStats s = compute_stats(load_corpus(data));
      std::cout << "topics " << grouped(s.n_topics) << '\n' << "documents " << grouped(s.n_documents) << '\n';
      if (s.n_paragraphs) std::cout << "paragraphs " << grouped(*s.n_paragraphs) << '\n';
      std::cout << "claims " << grouped(s.n_claims) << '\n'
                << "evidence " << grouped(s.n_evidence) << '\n'
                << "quadruplets " << grouped(s.n_quadruplets) << '\n';
    } else if (*split) {
      const CorpusSplits s = split_corpus(load_corpus(data), {ratios[0], ratios[1], ratios[2]}, seed);
      save_corpus(out + "/train.jsonl", s.train);
      save_corpus(out + "/dev.jsonl", s.dev);
      save_corpus(out + "/test.jsonl", s.test);
      std::cout << "train " << s.train.size() << " dev " << s.dev.size() << " test " << s.test.size() << '\n';
    } else if (*synth) {
      const auto docs = synthesize_corpus(synth_config);
      save_corpus(out, docs);
      std::cout << docs.size() << " documents written\n";
    } else if (*train) {
      const TrainConfig config = train_flags.resolve();
      const TrainResult r = train_model(load_corpus(data), load_optional(dev), config,
                                        [](const EpochLog& e) {
                                          std::fprintf(stderr, "epoch %zu loss %.6f%s\n", e.epoch, e.loss,
                                                       e.dev_f1 ? (" f1 " + std::to_string(*e.dev_f1)).c_str() : "");
                                        });
      save_model(model_path, r.model);
      if (!log_path.empty()) {
        std::ofstream log(log_path);
        log << r.log.report();
        if (!log) throw Error("failed writing " + log_path);
      }
      std::cout << "best epoch " << r.log.best_epoch << " f1 " << r.log.best_dev_f1 << '\n';
    } else if (*predict_cmd) {
      const Model model = load_model(model_path);
      const auto docs = load_corpus(data);
      const auto preds = predict_corpus(model, docs, route.value_or(model.config.mode));
      std::vector<std::string> lines;
      for (const Prediction& p : preds) lines.push_back(p.text);
      save_predictions(out, lines);
      std::cout << lines.size() << " predictions written\n";
    } else if (*score) {
      const auto docs = load_corpus(gold);
      const ParsedPredictions parsed = parse_predictions(docs, load_predictions(pred), kind);
      const auto golds = gold_sets(docs);
      std::vector<BreakdownRow> rows;
      if (proj) rows.push_back({*proj, match_score(golds, parsed.sets, *proj)});
      else rows = breakdown_report(golds, parsed.sets);
      std::cout << format_table(rows);
      for (const auto& r : rows) std::cout << format_key_values(r.projection, r.report) << '\n';
      std::cout << "warnings=" << parsed.warnings << '\n';
    } else if (*grid) {
      const TrainConfig config = grid_flags.resolve();
      std::cout << format_grid(eta_grid_search(load_corpus(data), load_optional(dev), etas, config));
    } else if (*roundtrip) {
      Rng rng(seed);
      std::size_t passed = 0;
      for (std::size_t i = 0; i < rounds; ++i) {
        const int n = 2 + static_cast<int>(rng.index(30));
        const QuadSet q = random_quads(rng, n, 12);
        bool ok = true;
        for (TemplateKind k : kTemplateKinds) {
          const ParseOutcome back = parse_quads(serialize(q, k), k, n);
          ok = ok && back.quads == q && back.warnings.empty();
        }
        passed += ok ? 1 : 0;
      }
      std::cout << passed << '/' << rounds << " round trips passed\n";
      return passed == rounds ? 0 : 1;
    } else if (*gradcheck) {
      bool ok = true;
      for (GradComponent c : {GradComponent::Encoder, GradComponent::Biaffine, GradComponent::Decoder}) {
        if (component != "all" && component != grad_component_name(c)) continue;
        const GradCheckResult r = grad_check(c, epsilon, seed);
        std::printf("%-8s max_relative_error=%.3e checked=%zu worst=%s\n",
                    std::string(grad_component_name(c)).c_str(), r.max_relative_error, r.checked,
                    r.worst_parameter.c_str());
        ok = ok && r.max_relative_error < 1e-4;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
