#include "aqe/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <sstream>

#include "aqe/error.hpp"
#include "aqe/rng.hpp"

namespace aqe {

std::string_view dummy_mode_name(DummyMode mode) {
  switch (mode) {
    case DummyMode::None: return "none";
    case DummyMode::Stance: return "stance";
    case DummyMode::Type: return "type";
  }
  return "none";
}

std::optional<DummyMode> dummy_mode_from_name(std::string_view name) {
  for (DummyMode m : {DummyMode::None, DummyMode::Stance, DummyMode::Type}) {
    if (dummy_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be positive");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be non-negative");
  if (dim == 0 || proj == 0 || heads == 0) throw ValidationError("dim, proj and heads must be positive");
  if (dim % heads != 0) throw ValidationError("heads must divide dim");
  if (max_len == 0 || max_output_len == 0) throw ValidationError("length limits must be positive");
  if (!(clip_norm >= 0.0)) throw ValidationError("clip must be non-negative");
  if (eval_every == 0) throw ValidationError("eval_every must be positive");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& v, std::size_t line) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ParseError(line, "expected a number, got '" + v + "'");
  return out;
}

std::size_t parse_count(const std::string& v, std::size_t line) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ParseError(line, "expected an unsigned integer, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

}  // namespace

TrainConfig read_train_config(std::istream& in) {
  TrainConfig c;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key == "epochs") c.epochs = parse_count(value, line);
    else if (key == "lr") c.learning_rate = parse_double(value, line);
    else if (key == "eta") c.eta = parse_double(value, line);
    else if (key == "seed") c.seed = parse_count(value, line);
    else if (key == "dim") c.dim = parse_count(value, line);
    else if (key == "proj") c.proj = parse_count(value, line);
    else if (key == "heads") c.heads = parse_count(value, line);
    else if (key == "max_len") c.max_len = parse_count(value, line);
    else if (key == "max_output_len") c.max_output_len = parse_count(value, line);
    else if (key == "clip") c.clip_norm = parse_double(value, line);
    else if (key == "eval_every") c.eval_every = parse_count(value, line);
    else if (key == "target_f1") c.target_f1 = parse_double(value, line);
    else if (key == "template") {
      const auto k = template_kind_from_name(value);
      if (!k) throw ParseError(line, "unknown template '" + value + "'");
      c.kind = *k;
    } else if (key == "mode") {
      const auto m = train_mode_from_name(value);
      if (!m) throw ParseError(line, "unknown mode '" + value + "'");
      c.mode = *m;
    } else if (key == "dummy") {
      const auto d = dummy_mode_from_name(value);
      if (!d) throw ParseError(line, "unknown dummy flag '" + value + "'");
      c.dummy = *d;
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return read_train_config(in);
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "epochs = " << c.epochs << '\n'
      << "lr = " << c.learning_rate << '\n'
      << "eta = " << c.eta << '\n'
      << "seed = " << c.seed << '\n'
      << "dim = " << c.dim << '\n'
      << "proj = " << c.proj << '\n'
      << "heads = " << c.heads << '\n'
      << "max_len = " << c.max_len << '\n'
      << "max_output_len = " << c.max_output_len << '\n'
      << "template = " << template_kind_name(c.kind) << '\n'
      << "mode = " << train_mode_name(c.mode) << '\n'
      << "dummy = " << dummy_mode_name(c.dummy) << '\n'
      << "clip = " << c.clip_norm << '\n'
      << "eval_every = " << c.eval_every << '\n';
  if (c.target_f1) out << "target_f1 = " << *c.target_f1 << '\n';
  return out.str();
}

std::string TrainLog::report(bool with_timing) const {
  std::string out;
  char buf[256];
  for (const EpochLog& e : epochs) {
    std::snprintf(buf, sizeof buf, "epoch %zu lg=%.9g la=%.9g loss=%.9g", e.epoch, e.generation, e.tagging,
                  e.loss);
    out += buf;
    if (e.dev_f1) {
      std::snprintf(buf, sizeof buf, " dev_f1=%.6f", *e.dev_f1);
      out += buf;
    }
    if (with_timing) {
      std::snprintf(buf, sizeof buf, " seconds=%.3f", e.seconds);
      out += buf;
    }
    out += '\n';
  }
  std::snprintf(buf, sizeof buf, "best epoch=%zu dev_f1=%.6f\n", best_epoch, best_dev_f1);
  out += buf;
  return out;
}

double joint_loss(double lg, double la) { return lg + la; }

std::vector<Document> apply_dummy(const std::vector<Document>& docs, DummyMode mode) {
  if (mode == DummyMode::None) return docs;
  std::vector<Document> out = docs;
  for (Document& d : out) {
    QuadSet forced;
    for (Quadruplet q : d.gold) {
      if (mode == DummyMode::Stance) q.stance = Stance::Support;
      else q.type = EvidenceType::Others;
      forced.insert(q);
    }
    d.gold = std::move(forced);
  }
  return out;
}

MatchReport evaluate(const Model& model, const std::vector<Document>& docs, TrainMode route) {
  const std::vector<Prediction> preds = predict_corpus(model, docs, route);
  std::vector<QuadSet> sets;
  sets.reserve(preds.size());
  for (const Prediction& p : preds) sets.push_back(p.quads);
  return match_score(gold_sets(docs), sets, Projection::Quad);
}

double sgd_step(ModelParams& params, ModelParams& grads, double learning_rate, double clip_norm) {
  double sq = 0.0;
  grads.visit([&sq](const std::string&, const Matrix& g) {
    for (double v : g.flat()) sq += v * v;
  });
  const double norm = std::sqrt(sq);
  double scale = learning_rate;
  if (clip_norm > 0.0 && norm > clip_norm) scale *= clip_norm / norm;
  std::vector<Matrix*> grad_tensors;
  grads.visit([&grad_tensors](const std::string&, Matrix& g) { grad_tensors.push_back(&g); });
  std::size_t k = 0;
  params.visit([&](const std::string&, Matrix& p) {
    auto pv = p.flat();
    auto gv = grad_tensors[k++]->flat();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= scale * gv[i];
  });
  grads.zero();
  return norm;
}

TrainResult train_model(const std::vector<Document>& train_in, const std::vector<Document>& dev,
                        const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_in.empty()) throw ValidationError("training corpus is empty");
  const std::vector<Document> train = apply_dummy(train_in, config.dummy);

  std::vector<Document> all = train;
  all.insert(all.end(), dev.begin(), dev.end());
  const int n_max = std::max(1, max_sentence_count(all));

  ModelConfig mc;
  mc.dim = config.dim;
  mc.heads = config.heads;
  mc.proj = config.proj;
  mc.max_input_len = config.max_len;
  mc.max_output_len = config.max_output_len;
  mc.n_max = n_max;
  mc.kind = config.kind;
  mc.mode = config.mode;
  Model model = make_model(mc, build_vocab(train, n_max), config.seed);

  const bool use_gen = config.mode != TrainMode::TagOnly;
  const bool use_tag = config.mode != TrainMode::GenOnly;
  const std::vector<Document>& selection = dev.empty() ? train_in : dev;

  std::vector<TagTable> tables;
  tables.reserve(train.size());
  for (const Document& d : train) tables.push_back(build_gold_table(d.gold, d.n()));

  ModelParams grads(mc, model.vocab.size(), model.target_vocab.size());
  TrainResult result{model, {}};
  bool have_best = false;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng order_rng(mix_seed(config.seed, epoch, 0x5eed));
    order_rng.shuffle(order);
    double sum_g = 0.0, sum_a = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t idx = order[k];
      const Document& doc = train[idx];
      EntrySet entries;
      if (use_tag) entries = training_entries(tables[idx], config.eta, mix_seed(config.seed, epoch, idx));
      const StepLosses l = forward_backward(model, doc, entries, use_gen, use_tag, grads);
      if (!std::isfinite(l.generation) || !std::isfinite(l.tagging)) {
        throw Error("training diverged at epoch " + std::to_string(epoch) + " on document " + doc.doc_id +
                    " (lg=" + std::to_string(l.generation) + ", la=" + std::to_string(l.tagging) + ")");
      }
      sum_g += l.generation;
      sum_a += l.tagging;
      sgd_step(model.params, grads, config.learning_rate, config.clip_norm);
    }
    EpochLog log;
    log.epoch = epoch;
    log.generation = sum_g / static_cast<double>(train.size());
    log.tagging = sum_a / static_cast<double>(train.size());
    log.loss = joint_loss(log.generation, log.tagging);

    const bool last = epoch == config.epochs;
    bool stop = false;
    if (epoch % config.eval_every == 0 || last) {
      const double f1 = evaluate(model, selection, config.mode).f1;
      log.dev_f1 = f1;
      if (!have_best || f1 > result.log.best_dev_f1) {
        have_best = true;
        result.model.params = model.params;
        result.log.best_epoch = epoch;
        result.log.best_dev_f1 = f1;
      }
      stop = config.target_f1 && f1 >= *config.target_f1;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (stop) break;
  }
  return result;
}

std::string_view grad_component_name(GradComponent c) {
  switch (c) {
    case GradComponent::Encoder: return "encoder";
    case GradComponent::Biaffine: return "biaffine";
    case GradComponent::Decoder: return "decoder";
  }
  return "encoder";
}

std::optional<GradComponent> grad_component_from_name(std::string_view name) {
  for (GradComponent c : {GradComponent::Encoder, GradComponent::Biaffine, GradComponent::Decoder}) {
    if (grad_component_name(c) == name) return c;
  }
  return std::nullopt;
}

namespace {

void visit_component(ModelParams& params, GradComponent c, const nn::TensorVisitor& f) {
  switch (c) {
    case GradComponent::Encoder: params.encoder.visit(f); break;
    case GradComponent::Biaffine: params.biaffine.visit(f); break;
    case GradComponent::Decoder: params.decoder.visit(f); break;
  }
}

}  // namespace

GradCheckResult grad_check(GradComponent component, double epsilon, std::uint64_t seed, bool zero_params) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  SynthConfig sc;
  sc.n_docs = 1;
  sc.max_sentences = 5;
  sc.vocab_size = 6;
  sc.quads_per_doc = 2;
  sc.seed = seed;
  const Document doc = synthesize_corpus(sc).front();

  ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  mc.proj = 4;
  mc.n_max = doc.n();
  Model model = make_model(mc, build_vocab({doc}, doc.n()), seed);
  if (zero_params) model.params.zero();
  const EntrySet entries = training_entries(build_gold_table(doc.gold, doc.n()), 2.0, seed);

  ModelParams grads(mc, model.vocab.size(), model.target_vocab.size());
  forward_backward(model, doc, entries, true, true, grads);

  std::vector<Matrix*> analytic;
  visit_component(grads, component, [&analytic](const std::string&, Matrix& g) { analytic.push_back(&g); });

  auto loss = [&]() {
    const StepLosses l = forward_losses(model, doc, entries, true, true);
    return joint_loss(l.generation, l.tagging);
  };

  GradCheckResult result;
  std::size_t k = 0;
  visit_component(model.params, component, [&](const std::string& name, Matrix& p) {
    auto values = p.flat();
    const auto g = analytic[k++]->flat();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double up = loss();
      values[i] = saved - epsilon;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), kGradCheckFloor});
      const double err = std::abs(g[i] - numeric) / denom;
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  return result;
}

std::vector<GridRow> eta_grid_search(const std::vector<Document>& train, const std::vector<Document>& dev,
                                     const std::vector<double>& etas, const TrainConfig& config) {
  if (etas.empty()) throw ValidationError("eta list is empty");
  std::vector<GridRow> rows(etas.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(etas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      TrainConfig c = config;
      c.eta = etas[static_cast<std::size_t>(i)];
      const TrainResult r = train_model(train, dev, c);
      const std::vector<Document>& target = dev.empty() ? train : dev;
      rows[static_cast<std::size_t>(i)] = {c.eta, evaluate(r.model, target, c.mode)};
    } catch (...) {
#pragma omp critical(aqe_grid_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string format_grid(const std::vector<GridRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%6s %9s %9s %9s\n", "eta", "precision", "recall", "f1");
  out += buf;
  for (const GridRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%6g %9.4f %9.4f %9.4f\n", r.eta, r.report.precision, r.report.recall,
                  r.report.f1);
    out += buf;
  }
  return out;
}

}  // namespace aqe
