//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rxnseq/eval.h"
#include "rxnseq/mol_graph.h"
#include "rxnseq/training.h"

namespace rxnseq {
namespace {

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    fields.push_back(f);
  }
  return fields;
}

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    out.push_back(line);
  }
  return out;
}

std::vector<float> flatten(const ModelParams<float> &m) {
  std::vector<float> out;
  m.visit([&](const std::string &, const auto &tensor) {
    out.insert(out.end(), tensor.data(), tensor.data() + tensor.size());
  });
  return out;
}

ReactionRecord rec(const std::string &s) {
  return ReactionRecord::from_string(s, ReactionSource::kGenerated);
}

TEST(ScorePrediction, UnparsablePredictionScoresZero) {
  PredictionScore s = score_prediction("CC(C", "CCC(C)(C)Cl");
  EXPECT_FALSE(s.valid);
  EXPECT_FALSE(s.exact);
  EXPECT_EQ(s.tanimoto, 0.0);
}

TEST(ScorePrediction, IdentityIsExact) {
  PredictionScore s = score_prediction("CCC(C)(C)Cl", "CCC(C)(C)Cl");
  EXPECT_TRUE(s.valid);
  EXPECT_TRUE(s.exact);
  EXPECT_EQ(s.tanimoto, 1.0);
}

TEST(ScorePrediction, DifferentRenderingIsExact) {
  PredictionScore s = score_prediction("ClC(C)(C)CC", "CCC(C)(C)Cl");
  EXPECT_TRUE(s.exact);
  EXPECT_EQ(s.tanimoto, 1.0);
}

TEST(ScorePrediction, PartialOverlapIsBetweenZeroAndOne) {
  PredictionScore s = score_prediction("CCO", "CC=O");
  EXPECT_TRUE(s.valid);
  EXPECT_FALSE(s.exact);
  EXPECT_GT(s.tanimoto, 0.0);
  EXPECT_LT(s.tanimoto, 1.0);
  // Both sides fingerprinted the same way as the library call.
  double t = tanimoto(morgan_fingerprint(parse_smiles("CCO")),
                      morgan_fingerprint(parse_smiles("CC=O")));
  EXPECT_DOUBLE_EQ(s.tanimoto, t);
}

TEST(ScorePrediction, MoleculeOrderIgnoredButMultiplicityCounts) {
  EXPECT_TRUE(score_prediction("O.CC", "CC.O").exact);
  EXPECT_FALSE(score_prediction("CCO.CCO", "CCO").exact);
  EXPECT_TRUE(score_prediction("CCO.CCO", "CCO").valid);
}

TEST(ScorePrediction, EmptyAndUnknownTokenPredictionsAreInvalid) {
  EXPECT_FALSE(score_prediction("", "CCO").valid);
  EXPECT_FALSE(score_prediction("C<unk>O", "CCO").valid);
  EXPECT_FALSE(score_prediction("C..C", "CCO").valid);
}

TEST(ScorePrediction, BadReferenceThrows) {
  EXPECT_THROW(score_prediction("CCO", "C1CC"), ReferenceInvalid);
  EXPECT_THROW(score_prediction("CCO", ""), ReferenceInvalid);
}

TEST(PrepareSource, UsesSmallestBucketByEncoderLength) {
  VocabPair v = build_vocab({ rec("CCO>>CC=O") });
  BucketSpec buckets = BucketSpec::parse("3:4,6:8,9:9");
  // "CCO>>" is five tokens.
  SourceInput s = prepare_source(rec("CCO>>"), v.input, buckets);
  EXPECT_EQ(s.bucket, 1u);
  ASSERT_EQ(s.encoder_ids.size(), 6u);
  EXPECT_EQ(s.encoder_ids[0], Vocab::kPad);
  EXPECT_EQ(s.encoder_ids[1], v.input.id_of(">"));
  EXPECT_EQ(s.encoder_ids[5], v.input.id_of("C"));
  EXPECT_THROW(prepare_source(rec("CCCCCCCCCC>>"), v.input, buckets),
               TooLongForBuckets);
}

// A small model memorizing a handful of reactions, shared by the tests below.
class TrainedFixture: public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    records_ = new std::vector<ReactionRecord>{
      rec("C=C.Cl>>CCCl"),
      rec("CC=C.Cl>>CC(C)Cl"),
      rec("C=C.Br>>CCBr"),
      rec("CCO>>CC=O"),
    };
    ModelConfig c;
    c.num_layers = 2;
    c.embedding_dim = 16;
    c.hidden_dim = 32;
    c.buckets = BucketSpec::parse("12:10");
    c.learning_rate = 0.01;
    c.seed = 3;
    TrainOptions o;
    o.batch_size = 4;
    o.steps = 1000;
    o.optimizer.kind = OptimizerKind::kAdam;
    model_ = new TrainedModel(fit(*records_, c, o));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete records_;
  }

  static std::vector<ReactionRecord> *records_;
  static TrainedModel *model_;
};

std::vector<ReactionRecord> *TrainedFixture::records_ = nullptr;
TrainedModel *TrainedFixture::model_ = nullptr;

TEST_F(TrainedFixture, MemorizedSetScoresPerfectly) {
  EvalReport r = evaluate(model_->params, *records_, model_->vocabs,
                          model_->config.buckets);
  EXPECT_EQ(r.n, records_->size());
  EXPECT_EQ(r.correct_ratio, 1.0);
  EXPECT_EQ(r.invalid_ratio, 0.0);
  EXPECT_EQ(r.mean_tanimoto, 1.0);
  EXPECT_LT(r.mean_cross_entropy, 0.1);
}

TEST_F(TrainedFixture, AggregatesAreMeansOfRows) {
  std::vector<ReactionRecord> test = *records_;
  test.push_back(rec("CCCC=C.Cl>>CCCCC(C)Cl"));
  test.push_back(rec("OCCCO>>O=CCCC=O"));
  EvalReport r = evaluate(model_->params, test, model_->vocabs,
                          model_->config.buckets);
  ASSERT_EQ(r.rows.size(), r.n);
  double exact = 0, tan = 0, invalid = 0, ce = 0;
  for (const EvalRow &row: r.rows) {
    exact += row.score.exact;
    tan += row.score.tanimoto;
    invalid += !row.score.valid;
    ce += row.cross_entropy;
  }
  const double n = static_cast<double>(r.n);
  EXPECT_DOUBLE_EQ(r.correct_ratio, exact / n);
  EXPECT_DOUBLE_EQ(r.mean_tanimoto, tan / n);
  EXPECT_DOUBLE_EQ(r.invalid_ratio, invalid / n);
  EXPECT_DOUBLE_EQ(r.mean_cross_entropy, ce / n);
  EXPECT_LE(r.correct_ratio, 1.0 - r.invalid_ratio);
}

TEST_F(TrainedFixture, CsvRowsRecomputeTheSummary) {
  EvalReport r = evaluate(model_->params, *records_, model_->vocabs,
                          model_->config.buckets);
  std::ostringstream csv;
  r.write_csv(csv);
  std::vector<std::string> lines = lines_of(csv.str());
  ASSERT_EQ(lines.size(), r.n + 1);
  EXPECT_EQ(lines[0], "index,source,reference,prediction,valid,exact,tanimoto,"
                      "cross_entropy");
  double tan = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = split_line(lines[i]);
    ASSERT_EQ(f.size(), 8u);
    tan += std::stod(f[6]);
  }
  EXPECT_NEAR(tan / static_cast<double>(r.n), r.mean_tanimoto, 1e-8);

  std::ostringstream json;
  r.write_json(json);
  EXPECT_NE(json.str().find("\"correct_ratio\""), std::string::npos);
  EXPECT_NE(json.str().find("\"mean_cross_entropy\""), std::string::npos);
}

TEST_F(TrainedFixture, OversizedRecordsAreSkipped) {
  std::vector<ReactionRecord> test = { records_->front(),
                                       rec("CCCCCCCCCCCCCC>>CCCCCCCCCCCCCC") };
  EvalReport r = evaluate(model_->params, test, model_->vocabs,
                          model_->config.buckets);
  EXPECT_EQ(r.n, 1u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], 1u);
  EXPECT_THROW(evaluate(model_->params, { test[1] }, model_->vocabs,
                        model_->config.buckets),
               EmptyTestset);
}

TEST_F(TrainedFixture, EmptyTestsetThrows) {
  EXPECT_THROW(evaluate(model_->params, {}, model_->vocabs, model_->config.buckets),
               EmptyTestset);
}

TEST_F(TrainedFixture, AttentionExportShape) {
  ReactionRecord input = rec("CC=C.Cl>>");
  std::ostringstream out;
  export_attention(model_->params, input, model_->vocabs, model_->config.buckets,
                   out);
  std::vector<std::string> lines = lines_of(out.str());
  Translation t = translate(model_->params, input, model_->vocabs,
                            model_->config.buckets);
  ASSERT_EQ(lines.size(), t.prediction.steps.size() + 1);
  EXPECT_EQ(t.prediction.steps.size(), t.prediction.ids.size() + 1);
  EXPECT_EQ(t.products, "CC(C)Cl");

  const std::size_t enc = 12;
  std::vector<std::string> header = split_line(lines[0]);
  ASSERT_EQ(header.size(), 1 + 2 * enc);
  // Reversed source after four pads.
  EXPECT_EQ(header[1], "score:<pad>");
  EXPECT_EQ(header[5], "score:>");
  EXPECT_EQ(header[7], "score:Cl");
  EXPECT_EQ(header[enc], "score:C");
  EXPECT_EQ(header[enc + 1], "weight:<pad>");

  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = split_line(lines[i]);
    ASSERT_EQ(f.size(), 1 + 2 * enc);
    double sum = 0;
    for (std::size_t k = 1 + enc; k < f.size(); ++k) {
      sum += std::stod(f[k]);
    }
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
  EXPECT_EQ(split_line(lines.back())[0], "<eos>");
}

TEST_F(TrainedFixture, EmbeddingExportMatchesParameters) {
  std::ostringstream none;
  export_embeddings(model_->params, model_->vocabs, 0, none);
  std::vector<std::string> header_only = lines_of(none.str());
  ASSERT_EQ(header_only.size(), 1u);
  EXPECT_EQ(split_line(header_only[0]).size(), 3u + 16u);

  std::ostringstream out;
  export_embeddings(model_->params, model_->vocabs, 3, out);
  std::vector<std::string> lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 1u + 6u);
  std::vector<std::string> first = split_line(lines[1]);
  EXPECT_EQ(first[0], "encoder");
  EXPECT_EQ(first[2], "1");
  int id = model_->vocabs.input.id_of(first[1]);
  EXPECT_EQ(id, Vocab::kNumSpecials);
  for (int c = 0; c < 16; ++c) {
    EXPECT_FLOAT_EQ(std::stof(first[3 + c]), model_->params.encoder_embedding(id, c));
  }
  std::vector<std::string> dec = split_line(lines[4]);
  EXPECT_EQ(dec[0], "decoder");
  EXPECT_EQ(dec[2], "1");

  EXPECT_THROW(export_embeddings(model_->params, model_->vocabs, 1000, out),
               InputError);
}

TEST(Fit, SeededRunsAreIdentical) {
  std::vector<ReactionRecord> records = { rec("C=C.Cl>>CCCl"), rec("CCO>>CC=O") };
  ModelConfig c;
  c.num_layers = 1;
  c.embedding_dim = 4;
  c.hidden_dim = 6;
  c.buckets = BucketSpec::parse("10:8");
  TrainOptions o;
  o.batch_size = 1;
  o.steps = 20;
  o.seed = 9;
  TrainLog la, lb;
  TrainedModel a = fit(records, c, o, &la);
  TrainedModel b = fit(records, c, o, &lb);
  EXPECT_EQ(la.losses, lb.losses);
  EXPECT_EQ(flatten(a.params), flatten(b.params));
  EXPECT_EQ(la.losses.size(), 20u);
}

TEST(Fit, NothingFitsThrows) {
  ModelConfig c;
  c.buckets = BucketSpec::parse("2:2");
  TrainOptions o;
  EXPECT_THROW(fit({ rec("CCO>>CC=O") }, c, o), InputError);
}

}  // namespace
}  // namespace rxnseq
