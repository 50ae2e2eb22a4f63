//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/training.h"

namespace rxnseq {

EncodedSet encode_records(const std::vector<ReactionRecord> &records,
                          const VocabPair &vocabs, const BucketSpec &buckets) {
  EncodedSet set;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      set.examples.push_back(encode_example(records[i], vocabs, buckets));
    } catch (const TooLongForBuckets &) {
      set.skipped.push_back(i);
    }
  }
  return set;
}

TrainLog train(ModelParams<float> &params, const ModelConfig &config,
               const std::vector<EncodedExample> &examples,
               const TrainOptions &options) {
  if (examples.empty()) {
    throw InputError("no training example fits the buckets");
  }
  OptimizerConfig oc = options.optimizer;
  oc.learning_rate = config.learning_rate;
  oc.clip_norm = config.gradient_clip_norm;
  Optimizer<float> optimizer(oc, params);
  BatchStream stream(examples, options.batch_size, options.seed);

  TrainLog log;
  log.examples = examples.size();
  std::vector<const EncodedExample *> batch;
  for (std::size_t step = 1; step <= options.steps; ++step) {
    const Batch &b = stream.next();
    batch.clear();
    for (std::size_t i: b.examples) {
      batch.push_back(&examples[i]);
    }
    double loss = train_step(params, batch, optimizer);
    log.losses.push_back(loss);
    if (options.on_step) {
      options.on_step(step, loss);
    }
  }
  return log;
}

TrainedModel fit(const std::vector<ReactionRecord> &records, ModelConfig base,
                 const TrainOptions &options, TrainLog *log) {
  TrainedModel model;
  model.vocabs = build_vocab(records);
  base.input_vocab_size = static_cast<int>(model.vocabs.input.size());
  base.output_vocab_size = static_cast<int>(model.vocabs.output.size());
  base.validate();
  model.config = base;
  model.params = ModelParams<float>::initialize(base);

  EncodedSet set = encode_records(records, model.vocabs, base.buckets);
  TrainLog result = train(model.params, base, set.examples, options);
  result.skipped = set.skipped.size();
  if (log) {
    *log = std::move(result);
  }
  return model;
}

}  // namespace rxnseq
