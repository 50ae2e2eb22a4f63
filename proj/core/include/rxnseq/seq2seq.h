//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_SEQ2SEQ_H_
#define RXNSEQ_SEQ2SEQ_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rxnseq/dataset.h"
#include "rxnseq/error.h"

namespace rxnseq {

class DimensionMismatch: public Error {
public:
  using Error::Error;
};

class UnknownId: public InputError {
public:
  using InputError::InputError;
};

class NonFiniteLoss: public Error {
public:
  using Error::Error;
};

class ConfigError: public InputError {
public:
  using InputError::InputError;
};

struct ModelConfig {
  int num_layers = 3;
  int embedding_dim = 64;
  int hidden_dim = 64;
  int input_vocab_size = Vocab::kNumSpecials;
  int output_vocab_size = Vocab::kNumSpecials;
  BucketSpec buckets = BucketSpec::standard();
  double learning_rate = 0.5;
  double gradient_clip_norm = 5.0;
  double init_scale = 0.08;
  std::uint64_t seed = 1;

  // Throws ConfigError.
  void validate() const;

  // Architecture fields only: dims, vocab sizes, buckets.
  bool same_architecture(const ModelConfig &other) const;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct GruLayerParams {
  Matrix<T> w_z, u_z;
  Vector<T> b_z;
  Matrix<T> w_r, u_r;
  Vector<T> b_r;
  Matrix<T> w_h, u_h;
  Vector<T> b_h;

  static GruLayerParams zeros(int input_dim, int hidden_dim);
  int input_dim() const { return static_cast<int>(w_z.cols()); }
  int hidden_dim() const { return static_cast<int>(w_z.rows()); }
};

template <typename T>
struct ModelParams {
  Matrix<T> encoder_embedding;  // input vocab x embedding
  Matrix<T> decoder_embedding;  // output vocab x embedding
  std::vector<GruLayerParams<T>> encoder;
  // Layer 0 reads [embedding; previous context].
  std::vector<GruLayerParams<T>> decoder;
  Matrix<T> attention_query;   // hidden x hidden
  Matrix<T> attention_memory;  // hidden x hidden
  Vector<T> attention_score;   // hidden
  Matrix<T> output_weight;     // output vocab x (2 * hidden)
  Vector<T> output_bias;       // output vocab

  static ModelParams zeros(const ModelConfig &config);
  static ModelParams zeros_like(const ModelParams &shape);
  // Uniform in [-init_scale, init_scale] from config.seed.
  static ModelParams initialize(const ModelConfig &config);

  int hidden_dim() const { return static_cast<int>(attention_query.rows()); }
  int num_layers() const { return static_cast<int>(encoder.size()); }

  // Calls fn(name, tensor) for every tensor in a fixed order; tensor is a
  // Matrix<T> or Vector<T>.
  template <typename Fn>
  void visit(Fn &&fn);
  template <typename Fn>
  void visit(Fn &&fn) const;

  bool all_finite() const;
  template <typename U>
  ModelParams<U> cast() const;
};

template <typename T>
Vector<T> gru_cell_step(const GruLayerParams<T> &p, const Vector<T> &x,
                        const Vector<T> &h);

template <typename T>
struct EncoderOutput {
  Matrix<T> memory;        // hidden x encoder length, top-layer states
  Matrix<T> final_hidden;  // hidden x layers
};

template <typename T>
EncoderOutput<T> encode(const ModelParams<T> &m, const std::vector<int> &ids);

// Pre-softmax scores and softmax weights over encoder positions.
struct AttentionRecord {
  std::vector<double> scores;
  std::vector<double> weights;
};

template <typename T>
struct AttentionResult {
  Vector<T> context;
  AttentionRecord record;
};

template <typename T>
AttentionResult<T> attention(const ModelParams<T> &m, const Vector<T> &query,
                             const Matrix<T> &memory);

template <typename T>
struct DecoderState {
  Matrix<T> hidden;    // hidden x layers
  Vector<T> context;   // previous attention context
};

template <typename T>
DecoderState<T> initial_decoder_state(const EncoderOutput<T> &encoded);

template <typename T>
struct StepOutput {
  Vector<T> logits;
  DecoderState<T> state;
  AttentionRecord attention;
};

template <typename T>
StepOutput<T> decode_step(const ModelParams<T> &m, int prev_token,
                          const DecoderState<T> &state,
                          const EncoderOutput<T> &encoded);

// Numerically stable softmax.
template <typename T>
Vector<T> softmax(const Vector<T> &logits);

struct Prediction {
  std::vector<int> ids;                   // without GO, EOS and PAD
  std::vector<int> steps;                 // every emitted id, EOS included
  std::vector<AttentionRecord> attention;  // one per entry of steps
};

// Greedy decoding from GO for at most max_len steps or until EOS.
template <typename T>
Prediction predict(const ModelParams<T> &m, const std::vector<int> &encoder_ids,
                   int max_len);

// Mean cross-entropy over non-PAD targets of the batch under teacher forcing.
// When grads is non-null it receives the gradient (overwritten).
template <typename T>
double forward_backward(const ModelParams<T> &m,
                        const std::vector<const EncodedExample *> &batch,
                        ModelParams<T> *grads);

template <typename T>
double global_norm(const ModelParams<T> &grads);

enum class OptimizerKind {
  kSgd,
  kAdam,
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.5;
  double clip_norm = 5.0;
  // The learning rate is multiplied by decay_factor when the mean loss of a
  // window of plateau_window steps exceeds the max of the previous three
  // window means. 0 disables decay.
  int plateau_window = 0;
  double decay_factor = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

template <typename T>
class Optimizer {
public:
  Optimizer(const OptimizerConfig &config, const ModelParams<T> &shape);

  // Clips grads to the global norm limit and updates params.
  void apply(ModelParams<T> &params, ModelParams<T> &grads);
  // Feeds the plateau schedule.
  void record_loss(double loss);

  double learning_rate() const { return learning_rate_; }
  std::uint64_t steps() const { return steps_; }

private:
  OptimizerConfig config_;
  double learning_rate_;
  std::uint64_t steps_ = 0;
  ModelParams<T> first_moment_;
  ModelParams<T> second_moment_;
  double window_sum_ = 0;
  int window_count_ = 0;
  std::deque<double> window_means_;
};

// Forward, backward and update on one same-bucket batch. Throws
// NonFiniteLoss when the loss or any parameter stops being finite.
template <typename T>
double train_step(ModelParams<T> &m, const std::vector<const EncodedExample *> &batch,
                  Optimizer<T> &optimizer);

// Mean per-token cross-entropy of one example.
template <typename T>
double example_loss(const ModelParams<T> &m, const EncodedExample &example);

template <typename T>
template <typename Fn>
void ModelParams<T>::visit(Fn &&fn) {
  fn("encoder/embedding", encoder_embedding);
  fn("decoder/embedding", decoder_embedding);
  auto layers = [&](const std::string &prefix, std::vector<GruLayerParams<T>> &ls) {
    for (std::size_t l = 0; l < ls.size(); ++l) {
      std::string p = prefix + std::to_string(l) + "/";
      fn(p + "w_z", ls[l].w_z);
      fn(p + "u_z", ls[l].u_z);
      fn(p + "b_z", ls[l].b_z);
      fn(p + "w_r", ls[l].w_r);
      fn(p + "u_r", ls[l].u_r);
      fn(p + "b_r", ls[l].b_r);
      fn(p + "w_h", ls[l].w_h);
      fn(p + "u_h", ls[l].u_h);
      fn(p + "b_h", ls[l].b_h);
    }
  };
  layers("encoder/gru", encoder);
  layers("decoder/gru", decoder);
  fn("attention/query", attention_query);
  fn("attention/memory", attention_memory);
  fn("attention/score", attention_score);
  fn("output/weight", output_weight);
  fn("output/bias", output_bias);
}

template <typename T>
template <typename Fn>
void ModelParams<T>::visit(Fn &&fn) const {
  const_cast<ModelParams<T> *>(this)->visit(
      [&](const std::string &name, const auto &tensor) { fn(name, tensor); });
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  out.encoder_embedding = encoder_embedding.template cast<U>();
  out.decoder_embedding = decoder_embedding.template cast<U>();
  auto layers = [](const std::vector<GruLayerParams<T>> &ls) {
    std::vector<GruLayerParams<U>> r;
    for (const auto &l: ls) {
      r.push_back({ l.w_z.template cast<U>(), l.u_z.template cast<U>(),
                    l.b_z.template cast<U>(), l.w_r.template cast<U>(),
                    l.u_r.template cast<U>(), l.b_r.template cast<U>(),
                    l.w_h.template cast<U>(), l.u_h.template cast<U>(),
                    l.b_h.template cast<U>() });
    }
    return r;
  };
  out.encoder = layers(encoder);
  out.decoder = layers(decoder);
  out.attention_query = attention_query.template cast<U>();
  out.attention_memory = attention_memory.template cast<U>();
  out.attention_score = attention_score.template cast<U>();
  out.output_weight = output_weight.template cast<U>();
  out.output_bias = output_bias.template cast<U>();
  return out;
}

}  // namespace rxnseq

#endif  // RXNSEQ_SEQ2SEQ_H_
