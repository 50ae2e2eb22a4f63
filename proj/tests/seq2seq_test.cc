//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/seq2seq.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rxnseq/checkpoint.h"
#include "rxnseq/dataset.h"
#include "support/gradient_check.h"

namespace rxnseq {
namespace {

ModelConfig small_config(int vin, int vout) {
  ModelConfig c;
  c.num_layers = 2;
  c.embedding_dim = 6;
  c.hidden_dim = 8;
  c.input_vocab_size = vin;
  c.output_vocab_size = vout;
  c.buckets = BucketSpec::parse("6:5,12:10");
  c.seed = 42;
  return c;
}

// Plain loops over the four GRU formulas.
std::vector<double> reference_gru(const GruLayerParams<double> &p,
                                  const std::vector<double> &x,
                                  const std::vector<double> &h) {
  const int n = p.hidden_dim();
  const int m = p.input_dim();
  auto affine = [&](const Matrix<double> &w, const Matrix<double> &u,
                    const Vector<double> &b, const std::vector<double> &hv, int i) {
    double s = b(i);
    for (int j = 0; j < m; ++j) {
      s += w(i, j) * x[j];
    }
    for (int j = 0; j < n; ++j) {
      s += u(i, j) * hv[j];
    }
    return s;
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> z(n), r(n), rh(n), out(n);
  for (int i = 0; i < n; ++i) {
    z[i] = sig(affine(p.w_z, p.u_z, p.b_z, h, i));
    r[i] = sig(affine(p.w_r, p.u_r, p.b_r, h, i));
    rh[i] = r[i] * h[i];
  }
  for (int i = 0; i < n; ++i) {
    double c = std::tanh(affine(p.w_h, p.u_h, p.b_h, rh, i));
    out[i] = (1 - z[i]) * h[i] + z[i] * c;
  }
  return out;
}

TEST(GruCellTest, ZeroParamsHalveState) {
  auto p = GruLayerParams<double>::zeros(3, 4);
  Vector<double> x = Vector<double>::Constant(3, 0.7);
  Vector<double> h(4);
  h << 1, -2, 3, 0.5;
  Vector<double> out = gru_cell_step<double>(p, x, h);
  EXPECT_TRUE(out.isApprox(0.5 * h));
  EXPECT_TRUE(gru_cell_step<double>(p, x, Vector<double>::Zero(4)).isZero());
}

TEST(GruCellTest, MatchesReferenceEvaluation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  auto p = GruLayerParams<double>::zeros(5, 4);
  for (auto *t: { &p.w_z, &p.u_z, &p.w_r, &p.u_r, &p.w_h, &p.u_h }) {
    *t = t->unaryExpr([&](double) { return u(rng); });
  }
  for (auto *t: { &p.b_z, &p.b_r, &p.b_h }) {
    *t = t->unaryExpr([&](double) { return u(rng); });
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(5), h(4);
    for (auto &v: x) {
      v = u(rng);
    }
    for (auto &v: h) {
      v = u(rng);
    }
    Vector<double> out = gru_cell_step<double>(p, Eigen::Map<Vector<double>>(x.data(), 5),
                                       Eigen::Map<Vector<double>>(h.data(), 4));
    auto ref = reference_gru(p, x, h);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(out(i), ref[i], 1e-12);
    }
  }
}

TEST(GruCellTest, DimensionMismatch) {
  auto p = GruLayerParams<double>::zeros(3, 4);
  EXPECT_THROW(gru_cell_step<double>(p, Vector<double>::Zero(2), Vector<double>::Zero(4)),
               DimensionMismatch);
  EXPECT_THROW(gru_cell_step<double>(p, Vector<double>::Zero(3), Vector<double>::Zero(5)),
               DimensionMismatch);
}

TEST(EncodeTest, ZeroParamsGiveZeroStates) {
  auto m = ModelParams<double>::zeros(small_config(8, 8));
  EncoderOutput<double> e = encode(m, std::vector<int>(6, Vocab::kPad));
  EXPECT_TRUE(e.memory.isZero());
  EXPECT_TRUE(e.final_hidden.isZero());
}

TEST(EncodeTest, Shapes) {
  auto m = ModelParams<double>::initialize(small_config(8, 8));
  EncoderOutput<double> e = encode(m, { 0, 0, 4, 5, 6, 7 });
  EXPECT_EQ(e.memory.rows(), 8);
  EXPECT_EQ(e.memory.cols(), 6);
  EXPECT_EQ(e.final_hidden.rows(), 8);
  EXPECT_EQ(e.final_hidden.cols(), 2);
  EXPECT_TRUE(e.final_hidden.col(1).isApprox(e.memory.col(5)));
  EXPECT_THROW(encode(m, { 0, 8 }), UnknownId);
}

TEST(EncodeTest, Causality) {
  auto m = ModelParams<double>::initialize(small_config(8, 8));
  auto one = encode(m, { 5 });
  auto two = encode(m, { 5, 6 });
  EXPECT_TRUE(one.memory.col(0).isApprox(two.memory.col(0)));
  EXPECT_FALSE(one.final_hidden.isApprox(two.final_hidden));
}

TEST(AttentionTest, EqualScoresGiveUniformWeights) {
  auto m = ModelParams<double>::zeros(small_config(8, 8));
  Matrix<double> memory = Matrix<double>::Random(8, 5);
  auto a = attention<double>(m, Vector<double>::Random(8), memory);
  ASSERT_EQ(a.record.weights.size(), 5u);
  for (double w: a.record.weights) {
    EXPECT_NEAR(w, 0.2, 1e-12);
  }
  EXPECT_TRUE(a.context.isApprox(memory.rowwise().mean()));
}

TEST(AttentionTest, SaturatesOnDominantScore) {
  auto m = ModelParams<double>::zeros(small_config(8, 8));
  // Score_i = v . tanh(B m_i); only the first memory column pushes tanh up.
  m.attention_memory = Matrix<double>::Identity(8, 8) * 1000.0;
  m.attention_score = Vector<double>::Constant(8, 1000.0 / 8);
  Matrix<double> memory = Matrix<double>::Zero(8, 4);
  memory.col(0).setOnes();
  auto a = attention<double>(m, Vector<double>::Zero(8), memory);
  EXPECT_NEAR(a.record.scores[0] - a.record.scores[1], 1000.0, 1e-6);
  EXPECT_NEAR(a.record.weights[0], 1.0, 1e-12);
  EXPECT_NEAR(a.record.weights[3], 0.0, 1e-12);
}

TEST(AttentionTest, WeightsNormalizedForRandomInputs) {
  auto m = ModelParams<double>::initialize(small_config(8, 8));
  m.attention_score *= 50;
  for (int trial = 0; trial < 20; ++trial) {
    auto a = attention<double>(m, Vector<double>::Random(8), Matrix<double>::Random(8, 7));
    double sum = 0;
    for (double w: a.record.weights) {
      EXPECT_GE(w, 0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  EXPECT_THROW(attention<double>(m, Vector<double>::Zero(3), Matrix<double>::Zero(8, 2)),
               DimensionMismatch);
}

TEST(DecodeStepTest, LogitsShapeAndNormalization) {
  auto m = ModelParams<float>::initialize(small_config(8, 9));
  auto enc = encode(m, { 0, 0, 4, 5, 6, 7 });
  auto step = decode_step(m, Vocab::kGo, initial_decoder_state(enc), enc);
  EXPECT_EQ(step.logits.size(), 9);
  EXPECT_NEAR(softmax<float>(step.logits).sum(), 1.0, 1e-6);
  EXPECT_EQ(step.attention.weights.size(), 6u);
  EXPECT_THROW(decode_step(m, 9, initial_decoder_state(enc), enc), UnknownId);
}

TEST(DecodeStepTest, TeacherForcedChainMatchesBatchLoss) {
  auto config = small_config(8, 9);
  auto m = ModelParams<double>::initialize(config);
  EncodedExample ex { { 0, 4, 5, 6, 7, 4 }, { 1, 4, 5, 8, 2 }, 0 };
  auto enc = encode(m, ex.encoder_ids);
  auto state = initial_decoder_state(enc);
  double total = 0;
  for (std::size_t t = 0; t + 1 < ex.decoder_ids.size(); ++t) {
    auto step = decode_step(m, ex.decoder_ids[t], state, enc);
    total -= std::log(softmax<double>(step.logits)(ex.decoder_ids[t + 1]));
    state = step.state;
  }
  EXPECT_NEAR(example_loss(m, ex), total / 4, 1e-10);
}

TEST(TrainTest, InitialLossNearUniform) {
  auto config = small_config(8, 20);
  auto m = ModelParams<float>::initialize(config);
  EncodedExample ex { { 0, 4, 5, 6, 7, 4 }, { 1, 4, 5, 8, 2 }, 0 };
  EXPECT_NEAR(example_loss(m, ex), std::log(20.0), 0.1 * std::log(20.0));
}

TEST(TrainTest, GradientMatchesFiniteDifferences) {
  auto problem = testing::tiny_problem(11);
  auto m = ModelParams<double>::initialize(problem.config);
  auto r = testing::check_gradients(m, problem.batch());
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor;
  EXPECT_GT(r.checked, 500u);
}

TEST(TrainTest, LossDecreasesOnRepeatedBatch) {
  auto config = small_config(8, 9);
  auto m = ModelParams<float>::initialize(config);
  std::vector<EncodedExample> ex = {
    { { 0, 4, 5, 6, 7, 4 }, { 1, 4, 5, 8, 2 }, 0 },
    { { 0, 0, 0, 7, 6, 5 }, { 1, 6, 7, 2, 0 }, 0 },
  };
  std::vector<const EncodedExample *> batch = { &ex[0], &ex[1] };
  Optimizer<float> opt({}, m);
  double prev = train_step(m, batch, opt);
  for (int i = 0; i < 50; ++i) {
    double loss = train_step(m, batch, opt);
    EXPECT_LT(loss, prev) << "step " << i;
    prev = loss;
  }
  EXPECT_TRUE(m.all_finite());
}

TEST(TrainTest, NonFiniteLossAborts) {
  auto config = small_config(8, 9);
  auto m = ModelParams<float>::initialize(config);
  m.output_bias(3) = std::numeric_limits<float>::quiet_NaN();
  EncodedExample ex { { 0, 4, 5, 6, 7, 4 }, { 1, 4, 5, 8, 2 }, 0 };
  Optimizer<float> opt({}, m);
  EXPECT_THROW(train_step<float>(m, { &ex }, opt), NonFiniteLoss);
}

TEST(TrainTest, PlateauHalvesLearningRate) {
  auto m = ModelParams<float>::zeros(small_config(8, 9));
  OptimizerConfig oc;
  oc.plateau_window = 2;
  Optimizer<float> opt(oc, m);
  for (double loss: { 3.0, 3.0, 2.0, 2.0, 1.0, 1.0 }) {
    opt.record_loss(loss);
  }
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 0.5);
  opt.record_loss(4.0);
  opt.record_loss(4.0);
  EXPECT_DOUBLE_EQ(opt.learning_rate(), 0.25);
}

TEST(TrainTest, SeededRunsAreIdentical) {
  auto config = small_config(8, 9);
  std::vector<EncodedExample> ex = {
    { { 0, 4, 5, 6, 7, 4 }, { 1, 4, 5, 8, 2 }, 0 },
  };
  auto run = [&] {
    auto m = ModelParams<float>::initialize(config);
    Optimizer<float> opt({}, m);
    std::vector<double> losses;
    for (int i = 0; i < 5; ++i) {
      losses.push_back(train_step<float>(m, { &ex[0] }, opt));
    }
    return std::make_pair(losses, predict(m, ex[0].encoder_ids, 5).steps);
  };
  EXPECT_EQ(run(), run());
}

// Reaction shown in the attention figure, memorized by a small model.
TEST(PredictTest, OverfitSingleReaction) {
  ReactionRecord r = normalize(ReactionRecord::from_string(
      "CC=C(C)C.Cl>>CCC(C)(C)Cl", ReactionSource::kIngested));
  VocabPair vocabs = build_vocab({ r });
  ModelConfig config;
  config.num_layers = 2;
  config.embedding_dim = 16;
  config.hidden_dim = 32;
  config.input_vocab_size = static_cast<int>(vocabs.input.size());
  config.output_vocab_size = static_cast<int>(vocabs.output.size());
  config.buckets = BucketSpec::parse("16:16");
  EncodedExample ex = encode_example(r, vocabs, config.buckets);

  auto m = ModelParams<float>::initialize(config);
  Optimizer<float> opt({}, m);
  for (int i = 0; i < 800; ++i) {
    train_step<float>(m, { &ex }, opt);
  }
  Prediction p = predict(m, ex.encoder_ids, 16);
  EXPECT_EQ(vocabs.output.decode(p.ids), target_tokens(r));
  EXPECT_EQ(p.steps.back(), Vocab::kEos);
  EXPECT_EQ(p.attention.size(), p.steps.size());
}

TEST(PredictTest, ZeroLengthAndDeterminism) {
  auto m = ModelParams<float>::initialize(small_config(8, 9));
  std::vector<int> input = { 0, 4, 5, 6, 7, 4 };
  EXPECT_TRUE(predict(m, input, 0).ids.empty());
  EXPECT_TRUE(predict(m, input, 0).steps.empty());
  EXPECT_EQ(predict(m, input, 5).steps, predict(m, input, 5).steps);
}

class CheckpointTest: public ::testing::Test {
protected:
  std::filesystem::path dir_ =
      std::filesystem::temp_directory_path()
      / ("rxnseq_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed())
         + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());

  void SetUp() override { std::filesystem::create_directories(dir_); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  auto config = small_config(8, 9);
  auto m = ModelParams<float>::initialize(config);
  auto path = dir_ / "model.rxs";
  save_checkpoint(m, config, path);
  Checkpoint cp = load_checkpoint(path);
  EXPECT_TRUE(cp.config.same_architecture(config));
  std::vector<std::vector<float>> a, b;
  m.visit([&](const std::string &, const auto &t) {
    a.emplace_back(t.data(), t.data() + t.size());
  });
  cp.params.visit([&](const std::string &, const auto &t) {
    b.emplace_back(t.data(), t.data() + t.size());
  });
  EXPECT_EQ(a, b);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "RXS2");
}

TEST_F(CheckpointTest, CorruptedMagic) {
  auto config = small_config(8, 9);
  auto path = dir_ / "model.rxs";
  save_checkpoint(ModelParams<float>::zeros(config), config, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("RXS9", 4);
  }
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const CheckpointError &e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kBadMagic);
  }
}

TEST_F(CheckpointTest, VersionAndTruncation) {
  auto config = small_config(8, 9);
  auto path = dir_ / "model.rxs";
  save_checkpoint(ModelParams<float>::zeros(config), config, path);
  auto size = std::filesystem::file_size(path);

  std::filesystem::resize_file(path, size - 3);
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const CheckpointError &e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kTruncatedFile);
  }

  save_checkpoint(ModelParams<float>::zeros(config), config, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put(7);
  }
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const CheckpointError &e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kVersionMismatch);
  }
}

TEST_F(CheckpointTest, MismatchedVocabularySizes) {
  auto config = small_config(8, 9);
  auto path = dir_ / "model.rxs";
  save_checkpoint(ModelParams<float>::zeros(config), config, path);
  auto other = small_config(8, 12);
  try {
    load_checkpoint(path, other);
    FAIL();
  } catch (const CheckpointError &e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kConfigMismatch);
  }
}

TEST_F(CheckpointTest, ModelBundleCarriesVocabularies) {
  ReactionRecord r = ReactionRecord::from_string("CCO>>CC=O", ReactionSource::kIngested);
  VocabPair vocabs = build_vocab({ r });
  ModelConfig config = small_config(static_cast<int>(vocabs.input.size()),
                                    static_cast<int>(vocabs.output.size()));
  TrainedModel model { config, ModelParams<float>::initialize(config), vocabs };
  auto path = dir_ / "bundle.rxs";
  save_model(model, path);
  TrainedModel back = load_model(path);
  EXPECT_EQ(back.vocabs.input, vocabs.input);
  EXPECT_EQ(back.vocabs.output, vocabs.output);
  EXPECT_TRUE(std::filesystem::exists(source_vocab_path(path)));

  std::filesystem::remove(target_vocab_path(path));
  EXPECT_THROW(load_model(path), InputError);
}

}  // namespace
}  // namespace rxnseq
