//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/seq2seq.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace rxnseq {
namespace {

template <typename T>
using Mat = Matrix<T>;
template <typename T>
using Vec = Vector<T>;

template <typename T>
Mat<T> sigmoid(const Mat<T> &x) {
  return (T(1) + (-x.array()).exp()).inverse().matrix();
}

template <typename T>
void require(bool ok, const std::string &what) {
  if (!ok) {
    throw DimensionMismatch(what);
  }
}

// Activations of one GRU cell over a batch (columns).
template <typename T>
struct GruCache {
  Mat<T> x, h, z, r, c;
};

template <typename T>
Mat<T> gru_forward(const GruLayerParams<T> &p, const Mat<T> &x, const Mat<T> &h,
                   GruCache<T> *cache) {
  Mat<T> z = sigmoid<T>((p.w_z * x + p.u_z * h).colwise() + p.b_z);
  Mat<T> r = sigmoid<T>((p.w_r * x + p.u_r * h).colwise() + p.b_r);
  Mat<T> rh = r.cwiseProduct(h);
  Mat<T> c = ((p.w_h * x + p.u_h * rh).colwise() + p.b_h).array().tanh().matrix();
  Mat<T> out = h + z.cwiseProduct(c - h);
  if (cache) {
    *cache = { x, h, std::move(z), std::move(r), std::move(c) };
  }
  return out;
}

// Accumulates parameter gradients into g; returns dL/dx and writes dL/dh.
template <typename T>
Mat<T> gru_backward(const GruLayerParams<T> &p, const GruCache<T> &k,
                    const Mat<T> &dh_out, GruLayerParams<T> &g, Mat<T> &dh_prev) {
  const auto one = T(1);
  Mat<T> dz = dh_out.cwiseProduct(k.c - k.h);
  Mat<T> dc = dh_out.cwiseProduct(k.z);
  dh_prev = dh_out.cwiseProduct((one - k.z.array()).matrix());

  Mat<T> dc_pre = dc.cwiseProduct((one - k.c.array().square()).matrix());
  Mat<T> rh = k.r.cwiseProduct(k.h);
  g.w_h.noalias() += dc_pre * k.x.transpose();
  g.u_h.noalias() += dc_pre * rh.transpose();
  g.b_h += dc_pre.rowwise().sum();
  Mat<T> drh = p.u_h.transpose() * dc_pre;
  Mat<T> dx = p.w_h.transpose() * dc_pre;
  dh_prev += drh.cwiseProduct(k.r);

  Mat<T> dr_pre = drh.cwiseProduct(k.h).cwiseProduct(
      (k.r.array() * (one - k.r.array())).matrix());
  g.w_r.noalias() += dr_pre * k.x.transpose();
  g.u_r.noalias() += dr_pre * k.h.transpose();
  g.b_r += dr_pre.rowwise().sum();
  dx.noalias() += p.w_r.transpose() * dr_pre;
  dh_prev.noalias() += p.u_r.transpose() * dr_pre;

  Mat<T> dz_pre = dz.cwiseProduct((k.z.array() * (one - k.z.array())).matrix());
  g.w_z.noalias() += dz_pre * k.x.transpose();
  g.u_z.noalias() += dz_pre * k.h.transpose();
  g.b_z += dz_pre.rowwise().sum();
  dx.noalias() += p.w_z.transpose() * dz_pre;
  dh_prev.noalias() += p.u_z.transpose() * dz_pre;
  return dx;
}

template <typename T>
Mat<T> gather(const Mat<T> &table, const std::vector<int> &ids) {
  Mat<T> out(table.cols(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] < 0 || ids[b] >= table.rows()) {
      throw UnknownId("token id " + std::to_string(ids[b]) + " outside vocabulary of "
                      + std::to_string(table.rows()));
    }
    out.col(static_cast<Eigen::Index>(b)) = table.row(ids[b]).transpose();
  }
  return out;
}

template <typename T>
void scatter_add(Mat<T> &table, const std::vector<int> &ids, const Mat<T> &grad) {
  for (std::size_t b = 0; b < ids.size(); ++b) {
    table.row(ids[b]) += grad.col(static_cast<Eigen::Index>(b)).transpose();
  }
}

// Column-wise softmax.
template <typename T>
Mat<T> softmax_columns(const Mat<T> &x) {
  Mat<T> out = (x.rowwise() - x.colwise().maxCoeff()).array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

// Encoder activations for a batch.
template <typename T>
struct EncoderTrace {
  std::vector<std::vector<GruCache<T>>> cells;  // [layer][position]
  std::vector<Mat<T>> memory;                   // top states per position
  std::vector<Mat<T>> final_hidden;             // per layer
};

// ids[position][example].
template <typename T>
void encoder_forward(const ModelParams<T> &m,
                     const std::vector<std::vector<int>> &ids, bool keep_cache,
                     EncoderTrace<T> &trace) {
  const int layers = m.num_layers();
  const Eigen::Index batch = ids.empty() ? 0 : static_cast<Eigen::Index>(ids[0].size());
  std::vector<Mat<T>> h(layers, Mat<T>::Zero(m.hidden_dim(), batch));
  if (keep_cache) {
    trace.cells.assign(layers, std::vector<GruCache<T>>(ids.size()));
  }
  trace.memory.clear();
  for (std::size_t s = 0; s < ids.size(); ++s) {
    Mat<T> x = gather(m.encoder_embedding, ids[s]);
    for (int l = 0; l < layers; ++l) {
      h[l] = gru_forward(m.encoder[l], x, h[l], keep_cache ? &trace.cells[l][s] : nullptr);
      x = h[l];
    }
    trace.memory.push_back(h[layers - 1]);
  }
  trace.final_hidden = std::move(h);
}

// One decoder step over a batch.
template <typename T>
struct DecoderStepTrace {
  std::vector<GruCache<T>> cells;
  Mat<T> query;
  Mat<T> alpha;   // positions x batch
  Mat<T> scores;  // positions x batch
  Mat<T> out_in;  // [query; context]
  Mat<T> logits;
};

template <typename T>
void decoder_step_forward(const ModelParams<T> &m, const std::vector<int> &prev,
                          std::vector<Mat<T>> &hidden, Mat<T> &context,
                          const std::vector<Mat<T>> &memory,
                          const std::vector<Mat<T>> &projected, bool keep_cache,
                          DecoderStepTrace<T> &trace) {
  const int layers = m.num_layers();
  const Eigen::Index batch = static_cast<Eigen::Index>(prev.size());
  const Eigen::Index emb = m.decoder_embedding.cols();
  Mat<T> x(emb + m.hidden_dim(), batch);
  x.topRows(emb) = gather(m.decoder_embedding, prev);
  x.bottomRows(m.hidden_dim()) = context;
  if (keep_cache) {
    trace.cells.resize(layers);
  }
  for (int l = 0; l < layers; ++l) {
    hidden[l] = gru_forward(m.decoder[l], x, hidden[l], keep_cache ? &trace.cells[l] : nullptr);
    x = hidden[l];
  }
  trace.query = hidden[layers - 1];

  const Eigen::Index positions = static_cast<Eigen::Index>(memory.size());
  Mat<T> a = m.attention_query * trace.query;
  trace.scores.resize(positions, batch);
  for (Eigen::Index s = 0; s < positions; ++s) {
    Mat<T> u = (a + projected[s]).array().tanh().matrix();
    trace.scores.row(s) = m.attention_score.transpose() * u;
  }
  trace.alpha = softmax_columns<T>(trace.scores);
  context.setZero(m.hidden_dim(), batch);
  for (Eigen::Index s = 0; s < positions; ++s) {
    context.array() += memory[s].array().rowwise() * trace.alpha.row(s).array();
  }
  trace.out_in.resize(2 * m.hidden_dim(), batch);
  trace.out_in.topRows(m.hidden_dim()) = trace.query;
  trace.out_in.bottomRows(m.hidden_dim()) = context;
  trace.logits = (m.output_weight * trace.out_in).colwise() + m.output_bias;
}

template <typename T>
std::vector<std::pair<T *, Eigen::Index>> tensor_spans(ModelParams<T> &p) {
  std::vector<std::pair<T *, Eigen::Index>> out;
  p.visit([&](const std::string &, auto &tensor) {
    out.emplace_back(tensor.data(), tensor.size());
  });
  return out;
}

template <typename T>
void check_batch(const ModelParams<T> &m,
                 const std::vector<const EncodedExample *> &batch) {
  if (batch.empty()) {
    throw InputError("empty batch");
  }
  std::size_t enc = batch[0]->encoder_ids.size();
  std::size_t dec = batch[0]->decoder_ids.size();
  for (const auto *ex: batch) {
    if (ex->encoder_ids.size() != enc || ex->decoder_ids.size() != dec) {
      throw DimensionMismatch("batch mixes sequence lengths");
    }
  }
  require<T>(dec >= 2, "decoder sequence needs at least GO and EOS");
  (void)m;
}

}  // namespace

void ModelConfig::validate() const {
  if (num_layers < 1 || embedding_dim < 1 || hidden_dim < 1) {
    throw ConfigError("model dimensions must be at least 1");
  }
  if (input_vocab_size < Vocab::kNumSpecials || output_vocab_size < Vocab::kNumSpecials) {
    throw ConfigError("vocabulary sizes must include the 4 special tokens");
  }
  if (!(learning_rate > 0) || !(gradient_clip_norm > 0) || !(init_scale >= 0)) {
    throw ConfigError("learning rate and clip norm must be positive");
  }
}

bool ModelConfig::same_architecture(const ModelConfig &other) const {
  return num_layers == other.num_layers && embedding_dim == other.embedding_dim
         && hidden_dim == other.hidden_dim
         && input_vocab_size == other.input_vocab_size
         && output_vocab_size == other.output_vocab_size && buckets == other.buckets;
}

template <typename T>
GruLayerParams<T> GruLayerParams<T>::zeros(int input_dim, int hidden_dim) {
  GruLayerParams p;
  for (Mat<T> *w: { &p.w_z, &p.w_r, &p.w_h }) {
    w->setZero(hidden_dim, input_dim);
  }
  for (Mat<T> *u: { &p.u_z, &p.u_r, &p.u_h }) {
    u->setZero(hidden_dim, hidden_dim);
  }
  for (Vec<T> *b: { &p.b_z, &p.b_r, &p.b_h }) {
    b->setZero(hidden_dim);
  }
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig &c) {
  c.validate();
  ModelParams p;
  p.encoder_embedding.setZero(c.input_vocab_size, c.embedding_dim);
  p.decoder_embedding.setZero(c.output_vocab_size, c.embedding_dim);
  for (int l = 0; l < c.num_layers; ++l) {
    p.encoder.push_back(GruLayerParams<T>::zeros(l == 0 ? c.embedding_dim : c.hidden_dim,
                                                 c.hidden_dim));
    p.decoder.push_back(GruLayerParams<T>::zeros(
        l == 0 ? c.embedding_dim + c.hidden_dim : c.hidden_dim, c.hidden_dim));
  }
  p.attention_query.setZero(c.hidden_dim, c.hidden_dim);
  p.attention_memory.setZero(c.hidden_dim, c.hidden_dim);
  p.attention_score.setZero(c.hidden_dim);
  p.output_weight.setZero(c.output_vocab_size, 2 * c.hidden_dim);
  p.output_bias.setZero(c.output_vocab_size);
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like(const ModelParams &shape) {
  ModelParams p = shape;
  p.visit([](const std::string &, auto &tensor) { tensor.setZero(); });
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::initialize(const ModelConfig &c) {
  ModelParams p = zeros(c);
  std::mt19937_64 rng(c.seed);
  p.visit([&](const std::string &, auto &tensor) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      // 53 random bits mapped to [0, 1), then to [-scale, scale).
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      tensor.data()[i] = static_cast<T>(c.init_scale * (2.0 * u - 1.0));
    }
  });
  return p;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  bool ok = true;
  visit([&](const std::string &, const auto &tensor) {
    ok = ok && tensor.allFinite();
  });
  return ok;
}

template <typename T>
Vector<T> gru_cell_step(const GruLayerParams<T> &p, const Vector<T> &x,
                        const Vector<T> &h) {
  require<T>(x.size() == p.input_dim(), "GRU input has wrong dimension");
  require<T>(h.size() == p.hidden_dim(), "GRU hidden state has wrong dimension");
  return gru_forward<T>(p, x, h, nullptr);
}

template <typename T>
EncoderOutput<T> encode(const ModelParams<T> &m, const std::vector<int> &ids) {
  std::vector<std::vector<int>> columns;
  for (int id: ids) {
    columns.push_back({ id });
  }
  EncoderTrace<T> trace;
  encoder_forward(m, columns, false, trace);
  EncoderOutput<T> out;
  out.memory.resize(m.hidden_dim(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t s = 0; s < ids.size(); ++s) {
    out.memory.col(static_cast<Eigen::Index>(s)) = trace.memory[s];
  }
  out.final_hidden.resize(m.hidden_dim(), m.num_layers());
  for (int l = 0; l < m.num_layers(); ++l) {
    out.final_hidden.col(l) = trace.final_hidden[l];
  }
  return out;
}

template <typename T>
Vector<T> softmax(const Vector<T> &logits) {
  return softmax_columns<T>(logits);
}

template <typename T>
AttentionResult<T> attention(const ModelParams<T> &m, const Vector<T> &query,
                             const Matrix<T> &memory) {
  require<T>(query.size() == m.hidden_dim(), "attention query has wrong dimension");
  require<T>(memory.rows() == m.hidden_dim(), "attention memory has wrong dimension");
  Vec<T> a = m.attention_query * query;
  Mat<T> u = ((m.attention_memory * memory).colwise() + a).array().tanh().matrix();
  Vec<T> scores = u.transpose() * m.attention_score;
  Vec<T> weights = softmax<T>(scores);
  AttentionResult<T> out;
  out.context = memory * weights;
  out.record.scores.assign(scores.data(), scores.data() + scores.size());
  out.record.weights.assign(weights.data(), weights.data() + weights.size());
  return out;
}

template <typename T>
DecoderState<T> initial_decoder_state(const EncoderOutput<T> &encoded) {
  return { encoded.final_hidden, Vec<T>::Zero(encoded.final_hidden.rows()) };
}

template <typename T>
StepOutput<T> decode_step(const ModelParams<T> &m, int prev_token,
                          const DecoderState<T> &state,
                          const EncoderOutput<T> &encoded) {
  require<T>(state.hidden.rows() == m.hidden_dim()
                 && state.hidden.cols() == m.num_layers(),
             "decoder state has wrong shape");
  require<T>(state.context.size() == m.hidden_dim(), "context has wrong dimension");
  require<T>(encoded.memory.rows() == m.hidden_dim(), "memory has wrong dimension");

  std::vector<Mat<T>> hidden;
  for (int l = 0; l < m.num_layers(); ++l) {
    hidden.push_back(state.hidden.col(l));
  }
  Mat<T> context = state.context;
  std::vector<Mat<T>> memory, projected;
  Mat<T> proj = m.attention_memory * encoded.memory;
  for (Eigen::Index s = 0; s < encoded.memory.cols(); ++s) {
    memory.push_back(encoded.memory.col(s));
    projected.push_back(proj.col(s));
  }
  DecoderStepTrace<T> trace;
  decoder_step_forward(m, { prev_token }, hidden, context, memory, projected, false,
                       trace);

  StepOutput<T> out;
  out.logits = trace.logits.col(0);
  out.state.hidden.resize(m.hidden_dim(), m.num_layers());
  for (int l = 0; l < m.num_layers(); ++l) {
    out.state.hidden.col(l) = hidden[l];
  }
  out.state.context = context;
  Vec<T> scores = trace.scores.col(0);
  Vec<T> weights = trace.alpha.col(0);
  out.attention.scores.assign(scores.data(), scores.data() + scores.size());
  out.attention.weights.assign(weights.data(), weights.data() + weights.size());
  return out;
}

template <typename T>
Prediction predict(const ModelParams<T> &m, const std::vector<int> &encoder_ids,
                   int max_len) {
  Prediction out;
  if (max_len <= 0) {
    return out;
  }
  EncoderOutput<T> encoded = encode(m, encoder_ids);
  DecoderState<T> state = initial_decoder_state(encoded);
  int prev = Vocab::kGo;
  for (int step = 0; step < max_len; ++step) {
    StepOutput<T> s = decode_step(m, prev, state, encoded);
    Eigen::Index best = 0;
    s.logits.maxCoeff(&best);
    prev = static_cast<int>(best);
    out.steps.push_back(prev);
    out.attention.push_back(std::move(s.attention));
    state = std::move(s.state);
    if (prev == Vocab::kEos) {
      break;
    }
    if (prev != Vocab::kPad && prev != Vocab::kGo) {
      out.ids.push_back(prev);
    }
  }
  return out;
}

template <typename T>
double forward_backward(const ModelParams<T> &m,
                        const std::vector<const EncodedExample *> &batch,
                        ModelParams<T> *grads) {
  check_batch(m, batch);
  const int layers = m.num_layers();
  const int hdim = m.hidden_dim();
  const std::size_t positions = batch[0]->encoder_ids.size();
  const std::size_t steps = batch[0]->decoder_ids.size() - 1;
  const Eigen::Index nb = static_cast<Eigen::Index>(batch.size());
  const bool backward = grads != nullptr;

  std::vector<std::vector<int>> enc_ids(positions, std::vector<int>(batch.size()));
  std::vector<std::vector<int>> dec_in(steps, std::vector<int>(batch.size()));
  std::vector<std::vector<int>> dec_out(steps, std::vector<int>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t s = 0; s < positions; ++s) {
      enc_ids[s][b] = batch[b]->encoder_ids[s];
    }
    for (std::size_t t = 0; t < steps; ++t) {
      dec_in[t][b] = batch[b]->decoder_ids[t];
      dec_out[t][b] = batch[b]->decoder_ids[t + 1];
    }
  }

  EncoderTrace<T> enc;
  encoder_forward(m, enc_ids, backward, enc);
  std::vector<Mat<T>> projected;
  for (const auto &mem: enc.memory) {
    projected.push_back(m.attention_memory * mem);
  }

  std::vector<Mat<T>> hidden = enc.final_hidden;
  Mat<T> context = Mat<T>::Zero(hdim, nb);
  std::vector<DecoderStepTrace<T>> trace(steps);
  std::vector<Mat<T>> probs(steps);
  std::size_t count = 0;
  double loss = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    decoder_step_forward(m, dec_in[t], hidden, context, enc.memory, projected, backward,
                         trace[t]);
    probs[t] = softmax_columns<T>(trace[t].logits);
    for (Eigen::Index b = 0; b < nb; ++b) {
      int target = dec_out[t][b];
      if (target == Vocab::kPad) {
        continue;
      }
      if (target < 0 || target >= probs[t].rows()) {
        throw UnknownId("target id " + std::to_string(target) + " outside vocabulary");
      }
      ++count;
      // Log-softmax from logits keeps tiny probabilities exact.
      const auto col = trace[t].logits.col(b);
      T mx = col.maxCoeff();
      T lse = mx + std::log((col.array() - mx).exp().sum());
      loss += static_cast<double>(lse - col(target));
    }
  }
  if (count > 0) {
    loss /= static_cast<double>(count);
  }
  if (!backward) {
    return loss;
  }

  ModelParams<T> &g = *grads;
  g = ModelParams<T>::zeros_like(m);
  const T inv = count > 0 ? T(1) / static_cast<T>(count) : T(0);

  std::vector<Mat<T>> d_memory(positions, Mat<T>::Zero(hdim, nb));
  std::vector<Mat<T>> d_projected(positions, Mat<T>::Zero(hdim, nb));
  std::vector<Mat<T>> dh(layers, Mat<T>::Zero(hdim, nb));
  Mat<T> d_context_feed = Mat<T>::Zero(hdim, nb);
  const Eigen::Index emb = m.decoder_embedding.cols();

  for (std::size_t ti = steps; ti-- > 0;) {
    const DecoderStepTrace<T> &k = trace[ti];
    Mat<T> dlogits = probs[ti];
    for (Eigen::Index b = 0; b < nb; ++b) {
      int target = dec_out[ti][b];
      if (target == Vocab::kPad) {
        dlogits.col(b).setZero();
      } else {
        dlogits(target, b) -= T(1);
        dlogits.col(b) *= inv;
      }
    }
    g.output_weight.noalias() += dlogits * k.out_in.transpose();
    g.output_bias += dlogits.rowwise().sum();
    Mat<T> d_out_in = m.output_weight.transpose() * dlogits;
    Mat<T> dq = d_out_in.topRows(hdim);
    Mat<T> dctx = d_out_in.bottomRows(hdim) + d_context_feed;

    // context = sum_s alpha_s * memory_s
    Mat<T> dalpha(static_cast<Eigen::Index>(positions), nb);
    for (std::size_t s = 0; s < positions; ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      dalpha.row(si) = dctx.cwiseProduct(enc.memory[s]).colwise().sum();
      d_memory[s].array() += dctx.array().rowwise() * k.alpha.row(si).array();
    }
    Mat<T> weighted = k.alpha.cwiseProduct(dalpha);
    Mat<T> dscores = weighted - (k.alpha.array().rowwise()
                                 * weighted.colwise().sum().array()).matrix();

    Mat<T> a = m.attention_query * k.query;
    Mat<T> da = Mat<T>::Zero(hdim, nb);
    for (std::size_t s = 0; s < positions; ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      Mat<T> u = (a + projected[s]).array().tanh().matrix();
      g.attention_score.noalias() += u * dscores.row(si).transpose();
      Mat<T> dpre = (m.attention_score * dscores.row(si)).cwiseProduct(
          (T(1) - u.array().square()).matrix());
      da += dpre;
      d_projected[s] += dpre;
    }
    g.attention_query.noalias() += da * k.query.transpose();
    dq.noalias() += m.attention_query.transpose() * da;

    Mat<T> dx;
    for (int l = layers - 1; l >= 0; --l) {
      Mat<T> d = dh[l] + (l == layers - 1 ? dq : dx);
      Mat<T> d_prev;
      dx = gru_backward(m.decoder[l], k.cells[l], d, g.decoder[l], d_prev);
      dh[l] = std::move(d_prev);
    }
    scatter_add<T>(g.decoder_embedding, dec_in[ti], dx.topRows(emb));
    d_context_feed = dx.bottomRows(hdim);
  }

  for (std::size_t s = 0; s < positions; ++s) {
    g.attention_memory.noalias() += d_projected[s] * enc.memory[s].transpose();
    d_memory[s].noalias() += m.attention_memory.transpose() * d_projected[s];
  }

  // dh now holds the gradient of the encoder's final states.
  for (std::size_t si = positions; si-- > 0;) {
    Mat<T> dx;
    for (int l = layers - 1; l >= 0; --l) {
      Mat<T> d = dh[l] + (l == layers - 1 ? d_memory[si] : dx);
      Mat<T> d_prev;
      dx = gru_backward(m.encoder[l], enc.cells[l][si], d, g.encoder[l], d_prev);
      dh[l] = std::move(d_prev);
    }
    scatter_add<T>(g.encoder_embedding, enc_ids[si], dx);
  }
  return loss;
}

template <typename T>
double global_norm(const ModelParams<T> &grads) {
  double sum = 0;
  grads.visit([&](const std::string &, const auto &tensor) {
    sum += static_cast<double>(tensor.squaredNorm());
  });
  return std::sqrt(sum);
}

template <typename T>
Optimizer<T>::Optimizer(const OptimizerConfig &config, const ModelParams<T> &shape)
    : config_(config), learning_rate_(config.learning_rate) {
  if (!(config.learning_rate > 0) || !(config.clip_norm > 0)) {
    throw ConfigError("learning rate and clip norm must be positive");
  }
  if (config.kind == OptimizerKind::kAdam) {
    first_moment_ = ModelParams<T>::zeros_like(shape);
    second_moment_ = ModelParams<T>::zeros_like(shape);
  }
}

template <typename T>
void Optimizer<T>::apply(ModelParams<T> &params, ModelParams<T> &grads) {
  ++steps_;
  double norm = global_norm(grads);
  T scale = norm > config_.clip_norm ? static_cast<T>(config_.clip_norm / norm) : T(1);
  auto p = tensor_spans(params);
  auto g = tensor_spans(grads);
  if (config_.kind == OptimizerKind::kSgd) {
    const T lr = static_cast<T>(learning_rate_) * scale;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (Eigen::Index j = 0; j < p[i].second; ++j) {
        p[i].first[j] -= lr * g[i].first[j];
      }
    }
    return;
  }
  auto m1 = tensor_spans(first_moment_);
  auto m2 = tensor_spans(second_moment_);
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double c1 = 1 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1 - std::pow(b2, static_cast<double>(steps_));
  const T step = static_cast<T>(learning_rate_ * std::sqrt(c2) / c1);
  const T eps = static_cast<T>(config_.adam_epsilon);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index j = 0; j < p[i].second; ++j) {
      T gj = g[i].first[j] * scale;
      T &a = m1[i].first[j];
      T &v = m2[i].first[j];
      a = static_cast<T>(b1) * a + static_cast<T>(1 - b1) * gj;
      v = static_cast<T>(b2) * v + static_cast<T>(1 - b2) * gj * gj;
      p[i].first[j] -= step * a / (std::sqrt(v) + eps);
    }
  }
}

template <typename T>
void Optimizer<T>::record_loss(double loss) {
  if (config_.plateau_window <= 0) {
    return;
  }
  window_sum_ += loss;
  if (++window_count_ < config_.plateau_window) {
    return;
  }
  double mean = window_sum_ / window_count_;
  window_sum_ = 0;
  window_count_ = 0;
  if (window_means_.size() >= 3
      && mean > *std::max_element(window_means_.end() - 3, window_means_.end())) {
    learning_rate_ *= config_.decay_factor;
  }
  window_means_.push_back(mean);
  if (window_means_.size() > 3) {
    window_means_.pop_front();
  }
}

template <typename T>
double train_step(ModelParams<T> &m, const std::vector<const EncodedExample *> &batch,
                  Optimizer<T> &optimizer) {
  ModelParams<T> grads;
  double loss = forward_backward(m, batch, &grads);
  if (!std::isfinite(loss)) {
    throw NonFiniteLoss("training loss is not finite at step "
                        + std::to_string(optimizer.steps() + 1));
  }
  if (!grads.all_finite()) {
    throw NonFiniteLoss("gradient is not finite at step "
                        + std::to_string(optimizer.steps() + 1) + " (loss "
                        + std::to_string(loss) + ")");
  }
  optimizer.apply(m, grads);
  if (!m.all_finite()) {
    throw NonFiniteLoss("parameters became non-finite at step "
                        + std::to_string(optimizer.steps()));
  }
  optimizer.record_loss(loss);
  return loss;
}

template <typename T>
double example_loss(const ModelParams<T> &m, const EncodedExample &example) {
  return forward_backward<T>(m, { &example }, nullptr);
}

#define RXNSEQ_INSTANTIATE(T)                                                          \
  template struct GruLayerParams<T>;                                                   \
  template struct ModelParams<T>;                                                      \
  template class Optimizer<T>;                                                         \
  template Vector<T> gru_cell_step(const GruLayerParams<T> &, const Vector<T> &,       \
                                   const Vector<T> &);                                 \
  template EncoderOutput<T> encode(const ModelParams<T> &, const std::vector<int> &);  \
  template Vector<T> softmax(const Vector<T> &);                                       \
  template AttentionResult<T> attention(const ModelParams<T> &, const Vector<T> &,     \
                                        const Matrix<T> &);                            \
  template DecoderState<T> initial_decoder_state(const EncoderOutput<T> &);            \
  template StepOutput<T> decode_step(const ModelParams<T> &, int,                      \
                                     const DecoderState<T> &,                          \
                                     const EncoderOutput<T> &);                        \
  template Prediction predict(const ModelParams<T> &, const std::vector<int> &, int);  \
  template double forward_backward(const ModelParams<T> &,                             \
                                   const std::vector<const EncodedExample *> &,        \
                                   ModelParams<T> *);                                  \
  template double global_norm(const ModelParams<T> &);                                 \
  template double train_step(ModelParams<T> &,                                         \
                             const std::vector<const EncodedExample *> &,              \
                             Optimizer<T> &);                                          \
  template double example_loss(const ModelParams<T> &, const EncodedExample &);

RXNSEQ_INSTANTIATE(float)
RXNSEQ_INSTANTIATE(double)

}  // namespace rxnseq
