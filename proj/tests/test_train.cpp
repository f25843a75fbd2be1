#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "aqe/checkpoint.hpp"
#include "aqe/error.hpp"
#include "aqe/train.hpp"
#include "generators.hpp"

namespace aqe {
namespace {

std::vector<Document> tiny_corpus(std::size_t n_docs, std::uint64_t seed) {
  SynthConfig c;
  c.n_docs = n_docs;
  c.max_sentences = 5;
  c.quads_per_doc = 2;
  c.vocab_size = 8;
  c.seed = seed;
  return synthesize_corpus(c);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 3;
  c.dim = 8;
  c.heads = 2;
  c.proj = 4;
  c.eta = 2;
  return c;
}

TEST(JointLoss, ExactSum) {
  EXPECT_EQ(joint_loss(1.5, 2.0), 3.5);
  EXPECT_EQ(joint_loss(0.0, 0.0), 0.0);
  const double la = std::log(8.0), lg = 9 * std::log(17.0);
  EXPECT_EQ(joint_loss(lg, la), lg + la);
  EXPECT_NEAR(joint_loss(lg, la), 27.579, 1e-3);
}

TEST(TrainConfigFile, RoundTrip) {
  TrainConfig c;
  c.epochs = 12;
  c.learning_rate = 0.003;
  c.eta = 3;
  c.seed = 99;
  c.dim = 32;
  c.proj = 16;
  c.heads = 8;
  c.kind = TemplateKind::OrderECAt;
  c.mode = TrainMode::TagOnly;
  c.dummy = DummyMode::Type;
  c.clip_norm = 0;
  c.eval_every = 5;
  c.target_f1 = 0.9;
  std::istringstream in(format_train_config(c));
  const TrainConfig back = read_train_config(in);
  EXPECT_EQ(back.epochs, 12u);
  EXPECT_EQ(back.learning_rate, 0.003);
  EXPECT_EQ(back.eta, 3.0);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.dim, 32u);
  EXPECT_EQ(back.proj, 16u);
  EXPECT_EQ(back.heads, 8u);
  EXPECT_EQ(back.kind, TemplateKind::OrderECAt);
  EXPECT_EQ(back.mode, TrainMode::TagOnly);
  EXPECT_EQ(back.dummy, DummyMode::Type);
  EXPECT_EQ(back.clip_norm, 0.0);
  EXPECT_EQ(back.eval_every, 5u);
  EXPECT_EQ(back.target_f1, 0.9);
  EXPECT_EQ(format_train_config(back), format_train_config(c));
}

TEST(TrainConfigFile, CommentsAndErrors) {
  std::istringstream ok("# toy run\nepochs = 4  # short\n\nlr=0.5\n");
  const TrainConfig c = read_train_config(ok);
  EXPECT_EQ(c.epochs, 4u);
  EXPECT_EQ(c.learning_rate, 0.5);

  const std::vector<std::string> bad = {"colour = blue\n", "epochs = many\n", "epochs\n", "mode = both\n",
                                        "epochs = 1\nlr = x\n"};
  for (const std::string& text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(read_train_config(in), ParseError) << text;
  }
  std::istringstream second("epochs = 1\nlr = x\n");
  try {
    read_train_config(second);
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(TrainConfigFile, Validation) {
  const std::vector<std::string> invalid = {"epochs = 0\n", "lr = 0\n", "lr = -1\n", "eta = -1\n",
                                            "dim = 10\nheads = 4\n", "eval_every = 0\n"};
  for (const std::string& text : invalid) {
    std::istringstream in(text);
    EXPECT_THROW(read_train_config(in), ValidationError) << text;
  }
}

TEST(ModeNames, RoundTrip) {
  for (TrainMode m : {TrainMode::Joint, TrainMode::GenOnly, TrainMode::TagOnly}) {
    EXPECT_EQ(train_mode_from_name(train_mode_name(m)), m);
  }
  for (DummyMode m : {DummyMode::None, DummyMode::Stance, DummyMode::Type}) {
    EXPECT_EQ(dummy_mode_from_name(dummy_mode_name(m)), m);
  }
}

TEST(Dummy, ForcesOneComponent) {
  const auto docs = tiny_corpus(10, 1);
  for (const Document& d : apply_dummy(docs, DummyMode::Stance)) {
    for (const Quadruplet& q : d.gold) EXPECT_EQ(q.stance, Stance::Support);
  }
  const auto typed = apply_dummy(docs, DummyMode::Type);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(typed[i].gold.size(), docs[i].gold.size());
    for (const Quadruplet& q : typed[i].gold) EXPECT_EQ(q.type, EvidenceType::Others);
  }
}

TEST(Training, DeterministicPerSeed) {
  const auto train = tiny_corpus(6, 2), dev = tiny_corpus(3, 3);
  const TrainResult a = train_model(train, dev, tiny_config());
  const TrainResult b = train_model(train, dev, tiny_config());
  EXPECT_EQ(a.log.report(false), b.log.report(false));
  std::ostringstream sa, sb;
  write_model(sa, a.model);
  write_model(sb, b.model);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Training, LogShapeAndFiniteLosses) {
  std::vector<std::size_t> seen;
  const TrainResult r =
      train_model(tiny_corpus(5, 4), tiny_corpus(2, 5), tiny_config(), [&](const EpochLog& e) { seen.push_back(e.epoch); });
  ASSERT_EQ(r.log.epochs.size(), 3u);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
  for (const EpochLog& e : r.log.epochs) {
    EXPECT_TRUE(std::isfinite(e.loss));
    EXPECT_GE(e.generation, 0.0);
    EXPECT_GE(e.tagging, 0.0);
    EXPECT_EQ(e.loss, joint_loss(e.generation, e.tagging));
    ASSERT_TRUE(e.dev_f1.has_value());
    EXPECT_GE(*e.dev_f1, 0.0);
    EXPECT_LE(*e.dev_f1, 1.0);
  }
  EXPECT_GE(r.log.best_epoch, 1u);
  const std::string report = r.log.report();
  EXPECT_NE(report.find("seconds="), std::string::npos);
  EXPECT_EQ(report.rfind("best epoch=", std::string::npos) != std::string::npos, true);
}

TEST(Training, SingleHeadModes) {
  TrainConfig c = tiny_config();
  c.mode = TrainMode::TagOnly;
  for (const EpochLog& e : train_model(tiny_corpus(4, 6), {}, c).log.epochs) {
    EXPECT_EQ(e.generation, 0.0);
    EXPECT_EQ(e.loss, e.tagging);
    EXPECT_GT(e.tagging, 0.0);
  }
  c.mode = TrainMode::GenOnly;
  for (const EpochLog& e : train_model(tiny_corpus(4, 6), {}, c).log.epochs) {
    EXPECT_EQ(e.tagging, 0.0);
    EXPECT_EQ(e.loss, e.generation);
  }
}

TEST(Training, DummyModesRun) {
  for (DummyMode d : {DummyMode::Stance, DummyMode::Type}) {
    TrainConfig c = tiny_config();
    c.dummy = d;
    c.epochs = 2;
    EXPECT_NO_THROW(train_model(tiny_corpus(4, 7), tiny_corpus(2, 8), c));
  }
}

TEST(Training, SingleDocumentLossDecreases) {
  TrainConfig c = tiny_config();
  c.epochs = 40;
  c.learning_rate = 5e-4;
  c.clip_norm = 0;
  c.eta = 100;  // every null cell, so the tagging entries are fixed
  const TrainResult r = train_model(tiny_corpus(1, 9), {}, c);
  for (std::size_t i = 1; i < r.log.epochs.size(); ++i) {
    EXPECT_LE(r.log.epochs[i].loss, r.log.epochs[i - 1].loss) << "epoch " << i + 1;
  }
  EXPECT_LT(r.log.epochs.back().loss, r.log.epochs.front().loss);
}

TEST(Training, DivergenceIsReported) {
  TrainConfig c = tiny_config();
  c.learning_rate = 1e8;
  c.clip_norm = 0;
  c.epochs = 5;
  try {
    train_model(tiny_corpus(3, 10), {}, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
  }
}

TEST(Training, RejectsEmptyCorpusAndBadConfig) {
  EXPECT_THROW(train_model({}, {}, tiny_config()), ValidationError);
  TrainConfig c = tiny_config();
  c.heads = 3;
  EXPECT_THROW(train_model(tiny_corpus(2, 1), {}, c), ValidationError);
}

TEST(Training, TargetF1StopsEarly) {
  TrainConfig c = tiny_config();
  c.epochs = 50;
  c.target_f1 = 0.0;
  EXPECT_EQ(train_model(tiny_corpus(3, 11), {}, c).log.epochs.size(), 1u);
}

TEST(GradCheck, ZeroParametersGiveZeroError) {
  for (GradComponent g : {GradComponent::Encoder, GradComponent::Biaffine, GradComponent::Decoder}) {
    const GradCheckResult r = grad_check(g, 1e-5, 1, true);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LT(r.max_relative_error, 1e-4) << grad_component_name(g);
  }
}

TEST(GradCheck, ComponentNames) {
  for (GradComponent g : {GradComponent::Encoder, GradComponent::Biaffine, GradComponent::Decoder}) {
    EXPECT_EQ(grad_component_from_name(grad_component_name(g)), g);
  }
}

TEST(SgdStep, ClipsAndZeroesGradients) {
  ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  mc.proj = 4;
  mc.n_max = 3;
  Model m = make_model(mc, build_vocab(tiny_corpus(1, 1), 3), 1);
  ModelParams grads = m.params;
  grads.zero();
  grads.biaffine.u(0, 0) = 30.0;
  grads.biaffine.u(0, 1) = 40.0;
  const ModelParams before = m.params;
  const double norm = sgd_step(m.params, grads, 0.1, 5.0);
  EXPECT_DOUBLE_EQ(norm, 50.0);
  EXPECT_NEAR(m.params.biaffine.u(0, 0), before.biaffine.u(0, 0) - 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(m.params.biaffine.u(0, 1), before.biaffine.u(0, 1) - 0.1 * 4.0, 1e-12);
  EXPECT_EQ(grads.biaffine.u(0, 0), 0.0);
  EXPECT_EQ(m.params.encoder.embedding, before.encoder.embedding);
}

TEST(Checkpoint, RoundTripGivesIdenticalOutputs) {
  const auto docs = tiny_corpus(4, 12);
  for (TrainMode mode : {TrainMode::Joint, TrainMode::TagOnly}) {
    TrainConfig c = tiny_config();
    c.mode = mode;
    c.kind = TemplateKind::Prompt;
    const Model model = train_model(docs, {}, c).model;
    std::stringstream buf;
    write_model(buf, model);
    const Model back = read_model(buf);
    EXPECT_EQ(back.config.mode, mode);
    EXPECT_EQ(back.config.kind, TemplateKind::Prompt);
    EXPECT_EQ(back.vocab.tokens(), model.vocab.tokens());
    std::ostringstream again;
    write_model(again, back);
    EXPECT_EQ(again.str(), buf.str());
    for (const Document& d : docs) {
      EXPECT_EQ(predict(back, d).text, predict(model, d).text);
      EXPECT_EQ(score_table(encode(d, back.params.encoder, back.vocab, back.encoder_config()).sentences,
                            back.params.biaffine)
                    .at(1, 0),
                score_table(encode(d, model.params.encoder, model.vocab, model.encoder_config()).sentences,
                            model.params.biaffine)
                    .at(1, 0));
    }
  }
}

TEST(Checkpoint, CorruptArchivesRejected) {
  const Model model = train_model(tiny_corpus(2, 13), {}, tiny_config()).model;
  std::ostringstream out;
  write_model(out, model);
  const std::string good = out.str();
  const std::vector<std::string> bad = {"", "aqe-model 2\n", good.substr(0, good.size() / 2),
                                        good.substr(0, good.find("tensor")) + "tensor bogus 1 1\n0x0p+0\nend\n"};
  for (const std::string& text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(read_model(in), Error);
  }
}

TEST(GridSearch, RowsPerEtaWithinUnitRange) {
  TrainConfig c = tiny_config();
  c.epochs = 2;
  const auto rows = eta_grid_search(tiny_corpus(4, 14), tiny_corpus(2, 15), {1, 3, 5, 10}, c);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].eta, (std::vector<double>{1, 3, 5, 10})[i]);
    for (double v : {rows[i].report.precision, rows[i].report.recall, rows[i].report.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const std::string table = format_grid(rows);
  EXPECT_NE(table.find("eta"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
  EXPECT_THROW(eta_grid_search(tiny_corpus(2, 1), {}, {}, c), ValidationError);
}

}  // namespace
}  // namespace aqe
