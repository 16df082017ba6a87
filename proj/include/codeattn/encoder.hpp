#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "codeattn/attention.hpp"

namespace codeattn {

struct EncoderConfig {
  int num_layers = 4;
  int num_heads = 4;
  int hidden_dim = 128;
  int ffn_dim = 512;
  int max_seq_len = 256;
  int vocab_size = 8192;
  std::uint64_t seed = 42;

  int head_dim() const { return hidden_dim / num_heads; }

  // Throws codeattn::Error on a violated invariant.
  void validate() const;

  // Canonical "key=value ..." form; also used for the checkpoint header.
  std::string describe() const;
  static EncoderConfig parse(std::string_view description);

  bool operator==(const EncoderConfig&) const = default;
};

inline constexpr double kLayerNormEpsilon = 1e-12;
inline constexpr double kInitStddev = 0.02;

template <typename Scalar>
using TensorOf = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-layer weights; activations are row vectors, so projections are x * W.
template <typename Scalar>
struct LayerTensors {
  using Tensor = TensorOf<Scalar>;
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
  Tensor attention_norm_scale, attention_norm_shift;
  Tensor ffn_in_weight, ffn_in_bias;
  Tensor ffn_out_weight, ffn_out_bias;
  Tensor ffn_norm_scale, ffn_norm_shift;

  template <typename Fn>
  void visit(const std::string& prefix, Fn&& fn) {
    fn(prefix + "attention.query.weight", query_weight);
    fn(prefix + "attention.query.bias", query_bias);
    fn(prefix + "attention.key.weight", key_weight);
    fn(prefix + "attention.key.bias", key_bias);
    fn(prefix + "attention.value.weight", value_weight);
    fn(prefix + "attention.value.bias", value_bias);
    fn(prefix + "attention.output.weight", output_weight);
    fn(prefix + "attention.output.bias", output_bias);
    fn(prefix + "attention.norm.scale", attention_norm_scale);
    fn(prefix + "attention.norm.shift", attention_norm_shift);
    fn(prefix + "ffn.in.weight", ffn_in_weight);
    fn(prefix + "ffn.in.bias", ffn_in_bias);
    fn(prefix + "ffn.out.weight", ffn_out_weight);
    fn(prefix + "ffn.out.bias", ffn_out_bias);
    fn(prefix + "ffn.norm.scale", ffn_norm_scale);
    fn(prefix + "ffn.norm.shift", ffn_norm_shift);
  }
};

// Every trainable tensor of the encoder and its pretraining heads. Stored as
// f32 (EncoderParams); the same layout in f64 holds gradients and the
// widened copy used for arithmetic.
template <typename Scalar>
struct ParamTensors {
  using Tensor = TensorOf<Scalar>;
  Tensor token_embedding;     // vocab_size x hidden
  Tensor position_embedding;  // max_seq_len x hidden
  Tensor segment_embedding;   // 2 x hidden
  std::vector<LayerTensors<Scalar>> layers;
  Tensor pooler_weight, pooler_bias;
  Tensor mlm_weight, mlm_bias;  // hidden x vocab_size
  Tensor nsp_weight, nsp_bias;  // hidden x 2

  // Visits tensors in a fixed order: fn(const std::string& name, Tensor&).
  template <typename Fn>
  void visit(Fn&& fn) {
    fn("embeddings.token", token_embedding);
    fn("embeddings.position", position_embedding);
    fn("embeddings.segment", segment_embedding);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].visit("layer" + std::to_string(l) + ".", fn);
    }
    fn("pooler.weight", pooler_weight);
    fn("pooler.bias", pooler_bias);
    fn("mlm.weight", mlm_weight);
    fn("mlm.bias", mlm_bias);
    fn("nsp.weight", nsp_weight);
    fn("nsp.bias", nsp_bias);
  }

  template <typename Fn>
  void visit(Fn&& fn) const {
    const_cast<ParamTensors*>(this)->visit(
        [&](const std::string& name, Tensor& t) { fn(name, static_cast<const Tensor&>(t)); });
  }

  static ParamTensors zeros(const EncoderConfig& config);

  template <typename To>
  ParamTensors<To> cast() const {
    ParamTensors<To> out = ParamTensors<To>::zeros_like_layers(layers.size());
    auto dst = out.tensor_list();
    std::size_t i = 0;
    visit([&](const std::string&, const Tensor& t) { *dst[i++] = t.template cast<To>(); });
    return out;
  }

  std::vector<Tensor*> tensor_list() {
    std::vector<Tensor*> list;
    visit([&](const std::string&, Tensor& t) { list.push_back(&t); });
    return list;
  }

  static ParamTensors zeros_like_layers(std::size_t layer_count) {
    ParamTensors p;
    p.layers.resize(layer_count);
    return p;
  }
};

using EncoderParams = ParamTensors<float>;
using WideParams = ParamTensors<double>;
using ParamGradients = ParamTensors<double>;

// normal(0, 0.02) weights, zero biases, unit norm scales; seeded from config.seed.
EncoderParams init_params(const EncoderConfig& config);

// FNV-1a over every tensor's name, shape and raw bytes.
std::uint64_t checksum(const EncoderParams& params);
std::uint64_t checksum(const WideParams& params);

bool bit_identical(const EncoderParams& a, const EncoderParams& b);

// Throws ShapeError if any tensor disagrees with config.
void check_shapes(const EncoderParams& params, const EncoderConfig& config);

struct ForwardOutput {
  std::vector<Matrix> hidden_states;  // num_layers + 1 entries, each seq_len x hidden
  AttentionTensor attention;          // post-softmax, pre-value
  RowVector pooled;                   // tanh(final[0] * W + b)
};

// Immutable inference view over a parameter set. Safe to share across threads.
class Encoder {
 public:
  Encoder(const EncoderParams& params, const EncoderConfig& config);
  explicit Encoder(WideParams params, const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }
  const WideParams& params() const { return params_; }

  ForwardOutput encode(std::span<const int> ids, std::span<const int> segments) const;

  // Affine + tanh applied to one hidden vector.
  RowVector pool(const RowVector& hidden) const;

  RowVector mlm_logits(const RowVector& hidden) const;

  // Argmax over the vocabulary at each position; ties go to the lowest id.
  std::vector<int> predict(std::span<const int> ids, std::span<const int> segments,
                           std::span<const std::size_t> positions) const;

 private:
  EncoderConfig config_;
  WideParams params_;
};

ForwardOutput encode(std::span<const int> ids, std::span<const int> segments,
                     const EncoderParams& params, const EncoderConfig& config);

std::vector<int> mlm_predict(std::span<const int> masked_ids, std::span<const std::size_t> positions,
                             const EncoderParams& params, const EncoderConfig& config);

// Lowest index among the maxima.
int argmax_lowest(std::span<const double> values);

// --- training -------------------------------------------------------------

struct TrainingExample {
  std::vector<int> ids;
  std::vector<int> segments;
  std::vector<std::size_t> mlm_positions;
  std::vector<int> mlm_targets;
  int nsp_label = 0;  // 1 = is-next, 0 = not-next
};

struct LossBreakdown {
  double mlm_loss = 0.0;  // mean cross-entropy over all masked positions of the batch
  double nsp_loss = 0.0;  // mean cross-entropy over the batch
  std::size_t mlm_correct = 0;
  std::size_t mlm_total = 0;
  std::size_t nsp_correct = 0;
  std::size_t nsp_total = 0;

  double total() const { return mlm_loss + nsp_loss; }
};

// Loss = mean MLM cross-entropy + mean NSP cross-entropy over the batch. When
// gradients is non-null it is resized to match and filled with dLoss/dParam.
LossBreakdown compute_loss(std::span<const TrainingExample> batch, const WideParams& params,
                           const EncoderConfig& config, ParamGradients* gradients);

}  // namespace codeattn
