//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_EVAL_H_
#define RXNSEQ_EVAL_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/dataset.h"
#include "rxnseq/reaction.h"
#include "rxnseq/seq2seq.h"

namespace rxnseq {

// The reference side of a scored pair does not parse. Points at a broken
// test set rather than at the model.
class ReferenceInvalid: public InputError {
public:
  using InputError::InputError;
};

class EmptyTestset: public InputError {
public:
  using InputError::InputError;
};

// Invariants: !valid implies !exact and tanimoto == 0; exact implies
// tanimoto == 1.
struct PredictionScore {
  bool valid = false;
  bool exact = false;
  double tanimoto = 0.0;
};

// Both arguments are product parts ("A.B"). Exact match compares the sorted
// canonical molecules; similarity fingerprints each side as one graph.
PredictionScore score_prediction(std::string_view predicted,
                                 std::string_view reference);

// Encoder input for a reaction whose products are unknown. The bucket is the
// smallest one whose encoder length fits the source.
struct SourceInput {
  std::vector<int> encoder_ids;  // padded to the bucket encoder length
  std::size_t bucket = 0;
};

SourceInput prepare_source(const ReactionRecord &r, const Vocab &input,
                           const BucketSpec &buckets);

struct Translation {
  std::string products;  // detokenized greedy prediction, possibly empty
  Prediction prediction;
  SourceInput source;
};

// Ignores any products on r. Decodes at most decoder_length - 1 steps.
template <typename T>
Translation translate(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets);

struct EvalRow {
  std::size_t index = 0;  // position in the test set
  std::string source;
  std::string reference;
  std::string prediction;
  PredictionScore score;
  double cross_entropy = 0.0;
};

struct EvalReport {
  std::size_t n = 0;
  double correct_ratio = 0.0;
  double mean_tanimoto = 0.0;
  double invalid_ratio = 0.0;
  double mean_cross_entropy = 0.0;
  std::vector<EvalRow> rows;
  std::vector<std::size_t> skipped;  // test-set indices beyond every bucket

  // Header plus one line per row.
  void write_csv(std::ostream &out) const;
  // Aggregates only.
  void write_json(std::ostream &out) const;
  void save(const std::filesystem::path &csv,
            const std::filesystem::path &json) const;
};

// Rows keep test-set order. Throws EmptyTestset when nothing is left to
// score after skipping oversized records.
template <typename T>
EvalReport evaluate(const ModelParams<T> &m,
                    const std::vector<ReactionRecord> &testset,
                    const VocabPair &vocabs, const BucketSpec &buckets);

// Header: "token", then "score:<tok>" and "weight:<tok>" per encoder position
// in model input order (reversed source, leading pads). One row per decoding
// step, EOS included.
template <typename T>
void export_attention(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets,
                      std::ostream &out);

template <typename T>
void export_attention(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets,
                      const std::filesystem::path &path);

// Columns: table (encoder|decoder), token, rank, e0..e{E-1}. Rank 1 is the
// most frequent token; specials are not exported. Throws InputError when
// top_k exceeds the non-special tokens of either vocabulary.
template <typename T>
void export_embeddings(const ModelParams<T> &m, const VocabPair &vocabs,
                       std::size_t top_k, std::ostream &out);

template <typename T>
void export_embeddings(const ModelParams<T> &m, const VocabPair &vocabs,
                       std::size_t top_k, const std::filesystem::path &path);

}  // namespace rxnseq

#endif  // RXNSEQ_EVAL_H_
