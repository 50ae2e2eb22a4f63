//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_TRAINING_H_
#define RXNSEQ_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rxnseq/checkpoint.h"
#include "rxnseq/dataset.h"
#include "rxnseq/reaction.h"
#include "rxnseq/seq2seq.h"

namespace rxnseq {

struct EncodedSet {
  std::vector<EncodedExample> examples;
  std::vector<std::size_t> skipped;  // record indices beyond every bucket
};

EncodedSet encode_records(const std::vector<ReactionRecord> &records,
                          const VocabPair &vocabs, const BucketSpec &buckets);

struct TrainOptions {
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;  // batch order only; weights use ModelConfig::seed
  // learning_rate and clip_norm are overridden by the ModelConfig fields.
  OptimizerConfig optimizer;
  // Called after every step with the 1-based step and its batch loss.
  std::function<void(std::size_t, double)> on_step;
};

struct TrainLog {
  std::vector<double> losses;  // one per step
  std::size_t examples = 0;
  std::size_t skipped = 0;
};

// Runs options.steps updates over an endless seeded batch stream.
TrainLog train(ModelParams<float> &params, const ModelConfig &config,
               const std::vector<EncodedExample> &examples,
               const TrainOptions &options);

// Builds vocabularies from records, sizes and initializes a model from base
// (vocab sizes overwritten) and trains it. Throws InputError when no record
// fits the buckets.
TrainedModel fit(const std::vector<ReactionRecord> &records, ModelConfig base,
                 const TrainOptions &options, TrainLog *log = nullptr);

}  // namespace rxnseq

#endif  // RXNSEQ_TRAINING_H_
