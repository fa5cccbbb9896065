#include "kgcopy/training.h"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kgcopy/errors.h"
#include "kgcopy/evaluation.h"
#include "kgcopy/optimizer.h"
#include "kgcopy/text.h"
#include "test_util.h"

namespace kgcopy {
namespace {

using kgcopy::testing::MakeToyData;

TrainConfig SmallConfig(int epochs = 2) {
  TrainConfig c;
  c.embed = 16;
  c.hidden = 16;
  c.max_triples = 8;
  c.batch_size = 8;
  c.epochs = epochs;
  c.max_decode_len = 12;
  return c;
}

TEST(TrainConfig, ParseAndRoundTrip) {
  TrainConfig c = ParseTrainConfig(
      "# comment\n"
      "batch_size = 16\n"
      "lr_decoder=0.01  # trailing comment\n"
      "\n"
      "select_by=bleu\n"
      "raw_mixture=true\n");
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_DOUBLE_EQ(c.lr_decoder, 0.01);
  EXPECT_EQ(c.select_by, "bleu");
  EXPECT_TRUE(c.raw_mixture);
  EXPECT_EQ(c.epochs, 100);

  TrainConfig back;
  for (const auto& [k, v] : c.ToMap()) back.Set(k, v);
  EXPECT_EQ(back.ToMap(), c.ToMap());
  EXPECT_EQ(back.Hash(), c.Hash());
  back.checkpoint_path = "elsewhere.ckpt";
  EXPECT_EQ(back.Hash(), c.Hash());
  back.seed = 7;
  EXPECT_NE(back.Hash(), c.Hash());
}

TEST(TrainConfig, Defaults) {
  TrainConfig c;
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_EQ(c.epochs, 100);
  EXPECT_DOUBLE_EQ(c.lr_encoder, 1e-3);
  EXPECT_DOUBLE_EQ(c.lr_decoder, 5e-3);
  EXPECT_DOUBLE_EQ(c.dropout_rnn, 0.3);
  EXPECT_DOUBLE_EQ(c.dropout_emb, 0.4);
  EXPECT_DOUBLE_EQ(c.grad_clip_norm, 5.0);
  EXPECT_EQ(c.hidden, 64);
  EXPECT_EQ(c.embed, 300);
  EXPECT_NO_THROW(c.Validate());
}

TEST(TrainConfig, Errors) {
  EXPECT_THROW(ParseTrainConfig("nope=1\n"), std::invalid_argument);
  EXPECT_THROW(ParseTrainConfig("batch_size\n"), std::invalid_argument);
  EXPECT_THROW(ParseTrainConfig("batch_size=ten\n"), std::invalid_argument);
  EXPECT_THROW(ParseTrainConfig("raw_mixture=maybe\n"), std::invalid_argument);
  TrainConfig c;
  c.dropout_emb = 1.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = TrainConfig{};
  c.select_by = "loss";
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  EXPECT_THROW(LoadTrainConfig("/nonexistent/config"), std::runtime_error);
}

std::vector<TrainingExample> LengthExamples(const std::vector<int>& lengths) {
  std::vector<TrainingExample> out;
  for (int n : lengths) {
    TrainingExample ex;
    ex.context_ids.assign(n % 7 + 1, 5);
    ex.target.assign(n, OutputToken::Word(5));
    ex.target.back() = OutputToken::Word(Vocabulary::kEos);
    ex.sentient_labels.assign(n, 0);
    out.push_back(ex);
  }
  return out;
}

TEST(MakeBatches, SizesCoverAndPadding) {
  auto examples = LengthExamples({3, 1, 4, 1, 5});
  auto batches = MakeBatches(examples, 2, 1);
  std::vector<int> sizes;
  std::multiset<int> seen;
  for (const auto& b : batches) {
    sizes.push_back(b.size());
    for (int i : b.indices) seen.insert(i);
    for (int r = 0; r < b.size(); ++r) {
      const auto& ex = examples[b.indices[r]];
      EXPECT_EQ(b.target_mask.row(r).sum(), static_cast<int>(ex.target.size()));
      EXPECT_EQ(b.context_mask.row(r).sum(), static_cast<int>(ex.context_ids.size()));
      for (int t = static_cast<int>(ex.target.size()); t < b.target_mask.cols(); ++t) {
        EXPECT_EQ(b.targets[r][t], OutputToken::Word(Vocabulary::kPad));
      }
    }
  }
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<int>{1, 2, 2}));
  EXPECT_EQ(seen, (std::multiset<int>{0, 1, 2, 3, 4}));
  EXPECT_THROW(MakeBatches(examples, 0, 1), std::invalid_argument);
}

TEST(MakeBatches, SeededOrder) {
  auto examples = LengthExamples({3, 1, 4, 1, 5, 9, 2, 6});
  auto a = MakeBatches(examples, 3, 4);
  auto b = MakeBatches(examples, 3, 4);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].indices, b[i].indices);
}

TEST(MakeBatches, BucketingReducesPadding) {
  std::mt19937 rng(3);
  std::vector<int> lengths(50);
  for (int& n : lengths) n = std::uniform_int_distribution<int>(1, 30)(rng);
  auto examples = LengthExamples(lengths);
  auto pads = [&](bool bucket) {
    int total = 0;
    for (const auto& b : MakeBatches(examples, 8, 11, bucket)) total += b.PadCount();
    return total;
  };
  EXPECT_LT(pads(true), pads(false));
}

TEST(ClipGradNorm, BoundsTheGlobalNorm) {
  ModelDims dims{7, 3, 4, 2};
  ModelParams g = ModelParams::Zeros(dims);
  g.out_proj.setConstant(3.0);
  g.gate_weights.setConstant(-2.0);
  double before = std::sqrt(g.SquaredNorm());
  EXPECT_DOUBLE_EQ(ClipGradNorm(g, 5.0), before);
  EXPECT_LE(std::sqrt(g.SquaredNorm()), 5.0 + 1e-6);
  ModelParams small = ModelParams::Zeros(dims);
  small.gate_bias(0) = 0.5;
  ClipGradNorm(small, 5.0);
  EXPECT_EQ(small.gate_bias(0), 0.5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ModelDims dims{6, 2, 3, 2};
  ModelParams p = ModelParams::Zeros(dims);
  ModelParams g = ModelParams::Zeros(dims);
  g.embedding.setConstant(0.3);   // encoder group
  g.out_bias.setConstant(-2.0);   // decoder group
  Adam adam(dims, AdamConfig{1e-3, 5e-3});
  adam.Step(p, g);
  EXPECT_NEAR(p.embedding(0, 0), -1e-3, 1e-9);
  EXPECT_NEAR(p.out_bias(0), 5e-3, 1e-9);
  EXPECT_EQ(p.gate_bias(0), 0.0);
}

TEST(Train, LossAdditivityClippingAndHistory) {
  auto data = MakeToyData();
  std::vector<EpochLog> seen;
  auto dir = kgcopy::testing::TempDir("train");
  TrainConfig config = SmallConfig(3);
  config.metrics_path = (dir / "metrics.csv").string();
  config.checkpoint_path = (dir / "best.ckpt").string();
  TrainResult r = Train(config, data.train, data.valid, data.corpus.kgs, data.table,
                        [&](const EpochLog& row) { seen.push_back(row); });
  ASSERT_EQ(r.history.epochs.size(), 3u);
  EXPECT_EQ(seen.size(), 3u);
  ASSERT_FALSE(r.history.batches.empty());
  for (const auto& b : r.history.batches) {
    EXPECT_NEAR(b.total, b.vocab + b.sentient, 1e-9);
    EXPECT_LE(b.clipped_grad_norm, config.grad_clip_norm + 1e-6);
  }
  EXPECT_GE(r.best.epoch, 0);
  EXPECT_TRUE(std::filesystem::exists(config.checkpoint_path));
  std::ifstream csv(config.metrics_path);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,train_loss,L_vocab,L_sentient,valid_bleu,valid_entity_f1");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove_all(dir);
}

TEST(Train, DeterministicForASeed) {
  auto data = MakeToyData();
  TrainConfig config = SmallConfig(2);
  TrainResult a = Train(config, data.train, data.valid, data.corpus.kgs, data.table);
  TrainResult b = Train(config, data.train, data.valid, data.corpus.kgs, data.table);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (size_t e = 0; e < a.history.epochs.size(); ++e) {
    EXPECT_EQ(a.history.epochs[e].train_loss, b.history.epochs[e].train_loss);
    EXPECT_EQ(a.history.epochs[e].valid_bleu, b.history.epochs[e].valid_bleu);
  }
  EXPECT_EQ(a.best.model.params().out_proj, b.best.model.params().out_proj);
  config.seed = 43;
  TrainResult c = Train(config, data.train, data.valid, data.corpus.kgs, data.table);
  EXPECT_NE(a.history.epochs[0].train_loss, c.history.epochs[0].train_loss);
}

TEST(Train, DivergenceRaisesTrainingError) {
  auto data = MakeToyData(6);
  TrainConfig config = SmallConfig(3);
  config.lr_decoder = 1e300;
  config.lr_encoder = 1e300;
  try {
    Train(config, data.train, data.valid, data.corpus.kgs, data.table);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_GE(e.batch(), 0);
  }
}

TEST(Train, RejectsBadInputs) {
  auto data = MakeToyData(4);
  TrainConfig config = SmallConfig(1);
  EXPECT_THROW(Train(config, {}, data.valid, data.corpus.kgs, data.table), std::invalid_argument);
  EXPECT_THROW(Train(config, data.train, {}, data.corpus.kgs, data.table), std::invalid_argument);
  config.embed = 8;
  EXPECT_THROW(Train(config, data.train, data.valid, data.corpus.kgs, data.table),
               std::invalid_argument);
}

TEST(MeasureTeacherForced, LossAgreesWithComputeLoss) {
  auto data = MakeToyData(4);
  ModelDims dims{data.vocab.size(), 8, 16, 8};
  KgCopyModel model(InitializeParams(dims, data.table, 1), data.table);
  TeacherForcedAccuracy acc = MeasureTeacherForced(model, data.train, data.corpus.kgs);
  int steps = 0;
  for (const auto& ex : data.train) steps += static_cast<int>(ex.target.size());
  EXPECT_EQ(acc.steps, steps);
  EXPECT_GE(acc.token, 0.0);
  EXPECT_LE(acc.token, 1.0);
  EXPECT_NEAR(acc.loss.total, acc.loss.vocab + acc.loss.sentient, 1e-12);
}

TEST(WriteMetricsCsv, Row) {
  std::ostringstream out;
  WriteMetricsCsvRow(out, EpochLog{4, 1.5, 1.25, 0.25, 10.0, 20.5});
  EXPECT_EQ(out.str(), "4,1.5,1.25,0.25,10,20.5\n");
}

}  // namespace
}  // namespace kgcopy

namespace kgcopy {
namespace {

std::vector<Dialogue> CaptainDialogues(const std::map<std::string, LocalKG>& kgs) {
  std::vector<Dialogue> out;
  for (const auto& [team, kg] : kgs) {
    Dialogue d;
    d.id = "toy-" + team;
    d.team_id = team;
    for (const auto& [rel, obj] : std::vector<std::pair<std::string, int>>{{"captain", 0},
                                                                           {"coach", 1}}) {
      d.turns.push_back({Speaker::kUser, "who is the " + rel + " of " + team + " ?"});
      d.turns.push_back({Speaker::kSystem, "the " + rel + " is " +
                                               JoinTokens(kg.object_tokens(obj)) + " ."});
    }
    out.push_back(d);
  }
  return out;
}

TEST(Overfit, LossSettlesAndCaptainIsCopied) {
  SyntheticCorpus corpus = MakeSyntheticCorpus();
  auto dialogues = CaptainDialogues(corpus.kgs);
  Vocabulary vocab = BuildVocabulary(dialogues);
  auto examples = LinkCorpus(dialogues, corpus.kgs, vocab);
  TrainConfig config;
  config.embed = 32;
  config.hidden = 32;
  config.max_triples = 8;
  config.batch_size = 2;
  config.epochs = 300;
  config.dropout_rnn = 0.0;
  config.dropout_emb = 0.0;
  config.select_by = "bleu";
  EmbeddingTable table = RandomEmbeddings(vocab, config.embed, 1);
  TrainResult r = Train(config, examples, examples, corpus.kgs, table);

  int regressions = 0, compared = 0;
  const auto& epochs = r.history.epochs;
  for (size_t e = 6; e < epochs.size(); ++e, ++compared) {
    regressions += epochs[e].train_loss > epochs[e - 1].train_loss;
  }
  EXPECT_LE(regressions, compared / 10) << regressions << " of " << compared;

  const KgCopyModel& model = r.last.model;
  for (const auto& [team, kg] : corpus.kgs) {
    KgContext ctx = model.PrepareKg(kg);
    auto query = Tokenize("who is the captain of " + team + " ?");
    std::vector<std::string> history{JoinTokens(query)};
    DecodeResult d = model.GreedyDecode(EncodeContext(history, vocab, 3, 80),
                                        model.MakeGateInputs(query, &ctx), ctx.copy_feed_ids, 10);
    int copy = -1;
    for (const auto& t : d.tokens) {
      if (t.is_copy()) copy = t.index;
    }
    ASSERT_EQ(copy, 0) << team;
    EXPECT_EQ(JoinTokens(ResolveTokens(d.tokens, vocab, &kg)),
              "the captain is " + JoinTokens(kg.object_tokens(0)) + " .");
  }
}

}  // namespace
}  // namespace kgcopy
