//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

namespace rxnseq {
namespace {

using Kind = CheckpointError::Kind;

class Writer {
public:
  explicit Writer(const std::filesystem::path &path): out_(path, std::ios::binary) {
    if (!out_) {
      throw CheckpointError(Kind::kIo, "cannot write " + path.string());
    }
  }

  void u32(std::uint32_t v) {
    unsigned char b[4] = { static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                           static_cast<unsigned char>(v >> 16),
                           static_cast<unsigned char>(v >> 24) };
    out_.write(reinterpret_cast<const char *>(b), 4);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void bytes(const char *data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

  void finish(const std::filesystem::path &path) {
    out_.flush();
    if (!out_) {
      throw CheckpointError(Kind::kIo, "write failed for " + path.string());
    }
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(std::vector<char> data): data_(std::move(data)) {}

  bool at_end() const { return pos_ == data_.size(); }

  void need(std::size_t n, const char *what) {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(Kind::kTruncatedFile,
                            std::string("checkpoint ends inside ") + what);
    }
  }

  std::uint32_t u32(const char *what) {
    need(4, what);
    const auto *b = reinterpret_cast<const unsigned char *>(data_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8
           | static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }

  float f32(const char *what) { return std::bit_cast<float>(u32(what)); }

  std::string text(std::size_t n, const char *what) {
    need(n, what);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

// Rank-2 tensors are stored row-major; vectors have rank 1.
template <typename Tensor>
void write_tensor(Writer &w, const std::string &name, const Tensor &t) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  if constexpr (Tensor::ColsAtCompileTime == 1) {
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(t.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      w.f32(t(i));
    }
  } else {
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        w.f32(t(r, c));
      }
    }
  }
}

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

}  // namespace

CheckpointError::CheckpointError(Kind kind, const std::string &what)
    : InputError(what), kind_(kind) {}

void save_checkpoint(const ModelParams<float> &params, const ModelConfig &config,
                     const std::filesystem::path &path) {
  config.validate();
  Writer w(path);
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(config.num_layers));
  w.u32(static_cast<std::uint32_t>(config.embedding_dim));
  w.u32(static_cast<std::uint32_t>(config.hidden_dim));
  w.u32(static_cast<std::uint32_t>(config.input_vocab_size));
  w.u32(static_cast<std::uint32_t>(config.output_vocab_size));
  w.u32(static_cast<std::uint32_t>(config.buckets.size()));
  for (const Bucket &b: config.buckets.buckets()) {
    w.u32(static_cast<std::uint32_t>(b.encoder_length));
    w.u32(static_cast<std::uint32_t>(b.decoder_length));
  }
  params.visit([&](const std::string &name, const auto &t) { write_tensor(w, name, t); });
  w.finish(path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(Kind::kIo, "cannot open checkpoint " + path.string());
  }
  std::vector<char> data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  Reader r(std::move(data));

  if (r.text(4, "magic") != std::string(kCheckpointMagic, 4)) {
    throw CheckpointError(Kind::kBadMagic, path.string() + " is not a model checkpoint");
  }
  std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kVersionMismatch,
                          "checkpoint version " + std::to_string(version)
                              + ", expected " + std::to_string(kCheckpointVersion));
  }

  Checkpoint cp;
  ModelConfig &c = cp.config;
  c.num_layers = static_cast<int>(r.u32("config"));
  c.embedding_dim = static_cast<int>(r.u32("config"));
  c.hidden_dim = static_cast<int>(r.u32("config"));
  c.input_vocab_size = static_cast<int>(r.u32("config"));
  c.output_vocab_size = static_cast<int>(r.u32("config"));
  std::uint32_t nbuckets = r.u32("config");
  std::vector<Bucket> buckets;
  for (std::uint32_t i = 0; i < nbuckets; ++i) {
    int enc = static_cast<int>(r.u32("bucket list"));
    int dec = static_cast<int>(r.u32("bucket list"));
    buckets.push_back({ enc, dec });
  }
  try {
    c.buckets = BucketSpec(std::move(buckets));
    c.validate();
  } catch (const InputError &e) {
    throw CheckpointError(Kind::kConfigMismatch,
                          std::string("checkpoint config is invalid: ") + e.what());
  }

  std::map<std::string, RawTensor> tensors;
  while (!r.at_end()) {
    std::uint32_t len = r.u32("tensor header");
    std::string name = r.text(len, "tensor name");
    RawTensor t;
    std::uint32_t rank = r.u32("tensor header");
    if (rank < 1 || rank > 2) {
      throw CheckpointError(Kind::kConfigMismatch, "tensor " + name + " has rank "
                                                       + std::to_string(rank));
    }
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32("tensor header"));
      count *= t.dims.back();
    }
    r.need(count * 4, "tensor values");
    t.values.resize(count);
    for (auto &v: t.values) {
      v = r.f32("tensor values");
    }
    tensors[name] = std::move(t);
  }

  cp.params = ModelParams<float>::zeros(c);
  cp.params.visit([&](const std::string &name, auto &t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw CheckpointError(Kind::kMissingTensor, "checkpoint lacks tensor " + name);
    }
    const RawTensor &raw = it->second;
    using Tensor = std::decay_t<decltype(t)>;
    std::vector<std::uint32_t> expected;
    if constexpr (Tensor::ColsAtCompileTime == 1) {
      expected = { static_cast<std::uint32_t>(t.size()) };
    } else {
      expected = { static_cast<std::uint32_t>(t.rows()), static_cast<std::uint32_t>(t.cols()) };
    }
    if (raw.dims != expected) {
      throw CheckpointError(Kind::kConfigMismatch, "tensor " + name
                                                       + " does not match the stored config");
    }
    if constexpr (Tensor::ColsAtCompileTime == 1) {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        t(i) = raw.values[i];
      }
    } else {
      for (Eigen::Index row = 0; row < t.rows(); ++row) {
        for (Eigen::Index col = 0; col < t.cols(); ++col) {
          t(row, col) = raw.values[row * t.cols() + col];
        }
      }
    }
  });
  return cp;
}

Checkpoint load_checkpoint(const std::filesystem::path &path,
                           const ModelConfig &expected) {
  Checkpoint cp = load_checkpoint(path);
  if (!cp.config.same_architecture(expected)) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "checkpoint " + path.string()
                              + " was saved with a different model configuration");
  }
  return cp;
}

std::filesystem::path source_vocab_path(const std::filesystem::path &checkpoint) {
  return checkpoint.string() + ".src.vocab";
}

std::filesystem::path target_vocab_path(const std::filesystem::path &checkpoint) {
  return checkpoint.string() + ".tgt.vocab";
}

void save_model(const TrainedModel &model, const std::filesystem::path &path) {
  if (model.vocabs.input.size() != static_cast<std::size_t>(model.config.input_vocab_size)
      || model.vocabs.output.size()
             != static_cast<std::size_t>(model.config.output_vocab_size)) {
    throw CheckpointError(Kind::kConfigMismatch, "vocabulary sizes do not match the model");
  }
  save_checkpoint(model.params, model.config, path);
  model.vocabs.input.save(source_vocab_path(path));
  model.vocabs.output.save(target_vocab_path(path));
}

TrainedModel load_model(const std::filesystem::path &path) {
  Checkpoint cp = load_checkpoint(path);
  TrainedModel m { cp.config, std::move(cp.params),
                   { Vocab::load(source_vocab_path(path)),
                     Vocab::load(target_vocab_path(path)) } };
  if (m.vocabs.input.size() != static_cast<std::size_t>(m.config.input_vocab_size)
      || m.vocabs.output.size() != static_cast<std::size_t>(m.config.output_vocab_size)) {
    throw CheckpointError(Kind::kConfigMismatch,
                          "vocabulary files next to " + path.string()
                              + " do not match the checkpoint");
  }
  return m;
}

}  // namespace rxnseq
