//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/dataset.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rxnseq/mol_graph.h"
#include "rxnseq/smiles.h"

namespace rxnseq {
namespace {

IngestResult ingest_text(const std::string &text, IngestOptions options = {}) {
  std::istringstream in(text);
  return ingest(in, options);
}

ReactionRecord record(const std::string &text) {
  return ReactionRecord::from_string(text, ReactionSource::kIngested);
}

std::string repeat(const std::string &s, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    out += s;
  }
  return out;
}

TEST(IngestTest, AcceptsFigureReaction) {
  auto r = ingest_text("CC=C(C)C.Cl>>CCC(C)(C)Cl\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.records[0].products,
            std::vector<std::string> { canonical_smiles("CCC(C)(C)Cl") });
  EXPECT_EQ(r.records[0].source, ReactionSource::kIngested);
}

TEST(IngestTest, StripsAtomMapsAndExtraColumns) {
  auto r = ingest_text("[CH3:1][CH2:2][OH:3]>>[CH3:1][CH:2]=[O:3]\tUS123\t1976\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].to_string(), "CCO>>CC=O");
}

TEST(IngestTest, SourceLengthBoundary) {
  // 149 carbons plus the first '>' make 150 characters.
  std::string ok = repeat("C", 149) + ">>C";
  std::string bad = repeat("C", 150) + ">>C";
  auto r = ingest_text(ok + "\n" + bad + "\n");
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectSourceLength)), 1u);
  EXPECT_EQ(r.report.issues.at(0).line, 2u);

  // Reagents count towards the same limit.
  auto with_reagent = ingest_text(repeat("C", 140) + ">" + repeat("O", 10) + ">C\n");
  EXPECT_EQ(with_reagent.report.rejected.at(std::string(kRejectSourceLength)), 1u);
}

TEST(IngestTest, ProductLengthBoundary) {
  auto r = ingest_text("C>>" + repeat("C", 80) + "\nC>>" + repeat("C", 81) + "\n");
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectProductLength)), 1u);
}

TEST(IngestTest, ProductCountBoundary) {
  auto r = ingest_text("CCCC>>C.CC.CCC\nCCCC>>C.CC.CCC.O\n");
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectProductCount)), 1u);
}

TEST(IngestTest, BadLinesAreCountedNotFatal) {
  auto r = ingest_text("CC>>\nC(>>C\nCC>C\nC1CC>>C\n\nCCO>>CC=O\n");
  EXPECT_EQ(r.report.lines, 5u);
  EXPECT_EQ(r.report.accepted, 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectNoProducts)), 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectParse)), 1u);
  EXPECT_EQ(r.report.rejected.at(std::string(kRejectNormalize)), 2u);
  EXPECT_EQ(r.report.issues.size(), 4u);
}

TEST(IngestTest, ReportTsv) {
  auto r = ingest_text("CCO>>CC=O\nC>>" + repeat("C", 81) + "\n");
  std::ostringstream out;
  r.report.write_tsv(out);
  EXPECT_EQ(out.str(),
            "lines\t2\naccepted\t1\nparse_error\t0\nsource_length\t0\n"
            "product_length\t1\nproduct_count\t0\nno_products\t0\n"
            "normalize_error\t0\n");
}

TEST(NormalizeTest, CanonicalizesAndSorts) {
  EXPECT_EQ(normalize(record("OCC>>CC=O")).to_string(), "CCO>>CC=O");
  EXPECT_EQ(normalize(record("C.CO>>O")), normalize(record("CO.C>>O")));
  auto once = normalize(record("OC(C)C.[Na+].[BH4-]>CO>C(C)(C)O"));
  EXPECT_EQ(normalize(once), once);
  EXPECT_TRUE(std::is_sorted(once.reactants.begin(), once.reactants.end()));
}

TEST(NormalizeTest, ErrorCarriesPart) {
  try {
    normalize(record("CC>>C1CC"));
    FAIL() << "expected CanonicalizationError";
  } catch (const CanonicalizationError &e) {
    EXPECT_EQ(e.part(), "C1CC");
  }
}

TEST(VocabTest, HandCountedCorpus) {
  VocabPair v = build_vocab({ record("CCO>>CC=O") });
  // Input tokens C, O and the separator '>'. C and '>' both occur twice;
  // the tie falls back to byte order.
  EXPECT_EQ(v.input.size(), 7u);
  EXPECT_EQ(v.input.token_of(4), ">");
  EXPECT_EQ(v.input.token_of(5), "C");
  EXPECT_EQ(v.input.token_of(6), "O");
  EXPECT_EQ(v.output.size(), 7u);
  EXPECT_EQ(v.output.token_of(4), "C");
  EXPECT_EQ(v.output.token_of(5), "=");
  EXPECT_EQ(v.output.token_of(6), "O");
}

TEST(VocabTest, EmptyCorpusHasSpecialsOnly) {
  VocabPair v = build_vocab({});
  EXPECT_EQ(v.input.size(), 4u);
  EXPECT_EQ(v.output.size(), 4u);
  EXPECT_EQ(v.input.token_of(Vocab::kPad), "<pad>");
  EXPECT_EQ(v.input.token_of(Vocab::kGo), "<go>");
  EXPECT_EQ(v.input.token_of(Vocab::kEos), "<eos>");
  EXPECT_EQ(v.input.token_of(Vocab::kUnk), "<unk>");
}

TEST(VocabTest, UnknownTokensMapToUnk) {
  VocabPair v = build_vocab({ record("CCO>>CC=O") });
  EXPECT_EQ(v.input.id_of("Br"), Vocab::kUnk);
  EXPECT_FALSE(v.input.find("Br"));
  EXPECT_THROW(v.input.token_of(99), InputError);
}

TEST(VocabTest, FileRoundTripIsByteStable) {
  VocabPair v = build_vocab({ record("CC(=O)Cl.CO>>COC(C)=O"), record("C=C.Cl>>CCCl") });
  std::ostringstream a;
  v.input.write(a);
  std::istringstream in(a.str());
  Vocab back = Vocab::read(in);
  EXPECT_EQ(back, v.input);
  std::ostringstream b;
  build_vocab({ record("CC(=O)Cl.CO>>COC(C)=O"), record("C=C.Cl>>CCCl") }).input.write(b);
  EXPECT_EQ(a.str(), b.str());
  // Line i is id i + 4.
  std::istringstream lines(a.str());
  std::string first;
  std::getline(lines, first);
  EXPECT_EQ(v.input.find(first), 4);
}

TEST(BucketSpecTest, ParsesStandardList) {
  BucketSpec b = BucketSpec::parse("54:54,70:60,90:65,150:80");
  EXPECT_EQ(b, BucketSpec::standard());
  EXPECT_EQ(b.to_string(), "54:54,70:60,90:65,150:80");
  EXPECT_EQ(b.size(), 4u);
}

TEST(BucketSpecTest, RejectsNonIncreasing) {
  EXPECT_THROW(BucketSpec::parse("54:54,54:60"), BucketSpecError);
  EXPECT_THROW(BucketSpec::parse("54:54,70:50"), BucketSpecError);
  EXPECT_THROW(BucketSpec::parse("54-54"), BucketSpecError);
  EXPECT_THROW(BucketSpec::parse(""), BucketSpecError);
  EXPECT_THROW(BucketSpec::parse("10:x"), BucketSpecError);
}

TEST(EncodeTest, BucketSelection) {
  VocabPair v = build_vocab({ record("CCO>>CC=O") });
  BucketSpec buckets = BucketSpec::standard();
  // 58 atoms plus two separators: 60 encoder tokens. 56 atoms plus GO and
  // EOS: 58 decoder tokens.
  auto mid = encode_example(record(repeat("C", 58) + ">>" + repeat("C", 56)), v, buckets);
  EXPECT_EQ(mid.bucket, 1u);
  EXPECT_EQ(mid.encoder_ids.size(), 70u);
  EXPECT_EQ(mid.decoder_ids.size(), 60u);

  auto small = encode_example(record(repeat("C", 8) + ">>" + repeat("C", 8)), v, buckets);
  EXPECT_EQ(small.bucket, 0u);

  EXPECT_THROW(encode_example(record(repeat("C", 149) + ">>C"), v, buckets),
               TooLongForBuckets);
}

TEST(EncodeTest, ReversedLeftPaddedEncoder) {
  ReactionRecord r = record("CCO>>CC=O");
  VocabPair v = build_vocab({ r });
  BucketSpec buckets = BucketSpec::parse("8:8,20:20");
  EncodedExample ex = encode_example(r, v, buckets);
  EXPECT_EQ(ex.bucket, 0u);
  std::vector<int> expected_enc = { 0, 0, 0, v.input.id_of(">"), v.input.id_of(">"),
                                    v.input.id_of("O"), v.input.id_of("C"),
                                    v.input.id_of("C") };
  EXPECT_EQ(ex.encoder_ids, expected_enc);
  std::vector<int> expected_dec = { Vocab::kGo,         v.output.id_of("C"),
                                    v.output.id_of("C"), v.output.id_of("="),
                                    v.output.id_of("O"), Vocab::kEos,
                                    Vocab::kPad,         Vocab::kPad };
  EXPECT_EQ(ex.decoder_ids, expected_dec);
}

TEST(EncodeTest, ReversalAndDecodeRecoverTokens) {
  std::vector<ReactionRecord> rs = { record("CC(=O)Cl.CO>>COC(C)=O"),
                                     record("C=C.Cl>>CCCl"),
                                     record("CC=C(C)C.Cl>>CCC(C)(C)Cl") };
  VocabPair v = build_vocab(rs);
  for (const auto &r: rs) {
    EncodedExample ex = encode_example(r, v, BucketSpec::standard());
    std::vector<int> enc;
    for (int id: ex.encoder_ids) {
      if (id != Vocab::kPad) {
        enc.push_back(id);
      }
    }
    std::reverse(enc.begin(), enc.end());
    std::vector<std::string> forward;
    for (int id: enc) {
      forward.push_back(v.input.token_of(id));
    }
    EXPECT_EQ(forward, source_tokens(r));
    EXPECT_EQ(v.output.decode(ex.decoder_ids), target_tokens(r));
  }
}

std::vector<EncodedExample> examples_in_buckets(const std::vector<int> &buckets) {
  std::vector<EncodedExample> out;
  for (int b: buckets) {
    EncodedExample ex;
    ex.bucket = b;
    out.push_back(ex);
  }
  return out;
}

TEST(BatchTest, ChunksWithinBucket) {
  auto ex = examples_in_buckets(std::vector<int>(10, 0));
  auto batches = epoch_batches(ex, 4, 7, 0);
  std::multiset<std::size_t> sizes;
  std::set<std::size_t> seen;
  for (const auto &b: batches) {
    sizes.insert(b.examples.size());
    seen.insert(b.examples.begin(), b.examples.end());
  }
  EXPECT_EQ(sizes, (std::multiset<std::size_t> { 2, 4, 4 }));
  EXPECT_EQ(seen.size(), 10u);
}

TEST(BatchTest, NoMixedBuckets) {
  auto ex = examples_in_buckets({ 0, 1, 0, 1, 1, 0, 2, 1 });
  for (const auto &b: epoch_batches(ex, 3, 1, 0)) {
    for (std::size_t i: b.examples) {
      EXPECT_EQ(ex[i].bucket, b.bucket);
    }
  }
}

TEST(BatchTest, DeterministicPerSeedAndEpoch) {
  auto ex = examples_in_buckets({ 0, 1, 0, 1, 1, 0, 2, 1, 0, 0, 0, 1 });
  auto flat = [](const std::vector<Batch> &bs) {
    std::vector<std::size_t> out;
    for (const auto &b: bs) {
      out.insert(out.end(), b.examples.begin(), b.examples.end());
    }
    return out;
  };
  EXPECT_EQ(flat(epoch_batches(ex, 2, 5, 3)), flat(epoch_batches(ex, 2, 5, 3)));
  EXPECT_NE(flat(epoch_batches(ex, 2, 5, 0)), flat(epoch_batches(ex, 2, 5, 1)));
  EXPECT_THROW(epoch_batches(ex, 0, 5, 0), InputError);
}

TEST(BatchTest, StreamAdvancesEpochs) {
  auto ex = examples_in_buckets({ 0, 0, 0 });
  BatchStream stream(ex, 2, 9);
  stream.next();
  stream.next();
  EXPECT_EQ(stream.epoch(), 0u);
  stream.next();
  EXPECT_EQ(stream.epoch(), 1u);
}

TEST(SplitTest, SeededPartition) {
  std::vector<ReactionRecord> rs;
  for (int i = 1; i <= 20; ++i) {
    rs.push_back(record(repeat("C", i) + ">>" + repeat("C", i) + "O"));
  }
  auto a = split_records(rs, 0.1, 0.2, 11);
  auto b = split_records(rs, 0.1, 0.2, 11);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid.size(), 2u);
  EXPECT_EQ(a.test.size(), 4u);
  EXPECT_EQ(a.train.size(), 14u);
  EXPECT_NE(split_records(rs, 0.1, 0.2, 12).test, a.test);
  EXPECT_THROW(split_records(rs, 0.6, 0.6, 1), InputError);
}

}  // namespace
}  // namespace rxnseq
