//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_CHECKPOINT_H_
#define RXNSEQ_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "rxnseq/dataset.h"
#include "rxnseq/seq2seq.h"

namespace rxnseq {

// Layout, all integers 32-bit little-endian:
//   "RXS2" | version | num_layers | embedding_dim | hidden_dim |
//   input_vocab | output_vocab | bucket count | (enc, dec) per bucket |
//   tensors until end of file:
//     name length | name | rank | dims... | float32 values, row-major
inline constexpr char kCheckpointMagic[4] = { 'R', 'X', 'S', '2' };
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError: public InputError {
public:
  enum class Kind {
    kIo,
    kBadMagic,
    kVersionMismatch,
    kTruncatedFile,
    kConfigMismatch,
    kMissingTensor,
  };

  CheckpointError(Kind kind, const std::string &what);
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct Checkpoint {
  ModelConfig config;  // architecture fields restored, the rest default
  ModelParams<float> params;
};

void save_checkpoint(const ModelParams<float> &params, const ModelConfig &config,
                     const std::filesystem::path &path);

Checkpoint load_checkpoint(const std::filesystem::path &path);

// Also rejects a checkpoint whose architecture differs from expected.
Checkpoint load_checkpoint(const std::filesystem::path &path,
                           const ModelConfig &expected);

// Checkpoint plus vocabularies stored next to it as <path>.src.vocab and
// <path>.tgt.vocab.
struct TrainedModel {
  ModelConfig config;
  ModelParams<float> params;
  VocabPair vocabs;
};

void save_model(const TrainedModel &model, const std::filesystem::path &path);
TrainedModel load_model(const std::filesystem::path &path);

std::filesystem::path source_vocab_path(const std::filesystem::path &checkpoint);
std::filesystem::path target_vocab_path(const std::filesystem::path &checkpoint);

}  // namespace rxnseq

#endif  // RXNSEQ_CHECKPOINT_H_
