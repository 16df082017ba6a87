#include "codeattn/encoder.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "codeattn/error.hpp"
#include "codeattn/rng.hpp"

namespace codeattn {

void EncoderConfig::validate() const {
  if (num_layers < 1 || num_heads < 1 || hidden_dim < 1 || ffn_dim < 1 || max_seq_len < 1 ||
      vocab_size < 1) {
    throw Error("encoder dimensions must all be >= 1 (" + describe() + ")");
  }
  if (hidden_dim % num_heads != 0) {
    throw Error("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by num_heads " +
                std::to_string(num_heads));
  }
  if (max_seq_len < 2) throw Error("max_seq_len must be >= 2 to hold [CLS] and [SEP]");
}

std::string EncoderConfig::describe() const {
  std::ostringstream out;
  out << "num_layers=" << num_layers << " num_heads=" << num_heads << " hidden_dim=" << hidden_dim
      << " ffn_dim=" << ffn_dim << " max_seq_len=" << max_seq_len << " vocab_size=" << vocab_size
      << " seed=" << seed;
  return out.str();
}

EncoderConfig EncoderConfig::parse(std::string_view description) {
  EncoderConfig config;
  std::istringstream in{std::string(description)};
  std::string item;
  while (in >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("malformed config entry '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "num_layers") config.num_layers = std::stoi(value);
    else if (key == "num_heads") config.num_heads = std::stoi(value);
    else if (key == "hidden_dim") config.hidden_dim = std::stoi(value);
    else if (key == "ffn_dim") config.ffn_dim = std::stoi(value);
    else if (key == "max_seq_len") config.max_seq_len = std::stoi(value);
    else if (key == "vocab_size") config.vocab_size = std::stoi(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else throw Error("unknown config key '" + key + "'");
  }
  config.validate();
  return config;
}

template <typename Scalar>
ParamTensors<Scalar> ParamTensors<Scalar>::zeros(const EncoderConfig& config) {
  config.validate();
  const int d = config.hidden_dim, f = config.ffn_dim, v = config.vocab_size;
  auto z = [](int r, int c) { return Tensor::Zero(r, c); };
  ParamTensors p;
  p.token_embedding = z(v, d);
  p.position_embedding = z(config.max_seq_len, d);
  p.segment_embedding = z(2, d);
  p.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (auto& layer : p.layers) {
    layer.query_weight = z(d, d);
    layer.query_bias = z(1, d);
    layer.key_weight = z(d, d);
    layer.key_bias = z(1, d);
    layer.value_weight = z(d, d);
    layer.value_bias = z(1, d);
    layer.output_weight = z(d, d);
    layer.output_bias = z(1, d);
    layer.attention_norm_scale = z(1, d);
    layer.attention_norm_shift = z(1, d);
    layer.ffn_in_weight = z(d, f);
    layer.ffn_in_bias = z(1, f);
    layer.ffn_out_weight = z(f, d);
    layer.ffn_out_bias = z(1, d);
    layer.ffn_norm_scale = z(1, d);
    layer.ffn_norm_shift = z(1, d);
  }
  p.pooler_weight = z(d, d);
  p.pooler_bias = z(1, d);
  p.mlm_weight = z(d, v);
  p.mlm_bias = z(1, v);
  p.nsp_weight = z(d, 2);
  p.nsp_bias = z(1, 2);
  return p;
}

template struct ParamTensors<float>;
template struct ParamTensors<double>;

EncoderParams init_params(const EncoderConfig& config) {
  EncoderParams params = EncoderParams::zeros(config);
  Rng rng(config.seed);
  params.visit([&](const std::string& name, EncoderParams::Tensor& tensor) {
    if (name.ends_with(".bias") || name.ends_with(".shift")) return;
    if (name.ends_with(".scale")) {
      tensor.setOnes();
      return;
    }
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      tensor.data()[i] = static_cast<float>(rng.normal() * kInitStddev);
    }
  });
  return params;
}

namespace {

template <typename Scalar>
std::uint64_t fnv_checksum(const ParamTensors<Scalar>& params) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  params.visit([&](const std::string& name, const TensorOf<Scalar>& t) {
    mix(name.data(), name.size());
    const std::int64_t shape[2] = {t.rows(), t.cols()};
    mix(shape, sizeof shape);
    mix(t.data(), static_cast<std::size_t>(t.size()) * sizeof(Scalar));
  });
  return hash;
}

}  // namespace

std::uint64_t checksum(const EncoderParams& params) { return fnv_checksum(params); }
std::uint64_t checksum(const WideParams& params) { return fnv_checksum(params); }

bool bit_identical(const EncoderParams& a, const EncoderParams& b) {
  std::vector<const EncoderParams::Tensor*> left, right;
  a.visit([&](const std::string&, const EncoderParams::Tensor& t) { left.push_back(&t); });
  b.visit([&](const std::string&, const EncoderParams::Tensor& t) { right.push_back(&t); });
  if (left.size() != right.size()) return false;
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (left[i]->rows() != right[i]->rows() || left[i]->cols() != right[i]->cols()) return false;
    if (std::memcmp(left[i]->data(), right[i]->data(),
                    static_cast<std::size_t>(left[i]->size()) * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

void check_shapes(const EncoderParams& params, const EncoderConfig& config) {
  const EncoderParams expected = EncoderParams::zeros(config);
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> want, got;
  expected.visit([&](const std::string& n, const EncoderParams::Tensor& t) {
    want.push_back({n, {t.rows(), t.cols()}});
  });
  params.visit([&](const std::string& n, const EncoderParams::Tensor& t) {
    got.push_back({n, {t.rows(), t.cols()}});
  });
  if (want.size() != got.size()) throw ShapeError("parameter count does not match config");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i] != got[i]) throw ShapeError("tensor " + got[i].first + " has the wrong shape");
  }
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

namespace {

using Vector = Eigen::VectorXd;

struct NormCache {
  Matrix normalized;
  Vector inv_std;
};

struct LayerCache {
  Matrix input;
  Matrix query, key, value;
  std::vector<Matrix> probs;  // per head
  Matrix context;
  NormCache norm1;
  Matrix hidden1;
  Matrix ffn_pre;
  Matrix ffn_act;
  NormCache norm2;
};

struct Trace {
  std::vector<LayerCache> layers;
  Matrix final_hidden;
};

Matrix layer_norm(const Matrix& input, const Matrix& scale, const Matrix& shift, NormCache& cache) {
  const Vector mean = input.rowwise().mean();
  Matrix centered = input.colwise() - mean;
  const Vector variance = centered.array().square().rowwise().mean();
  cache.inv_std = (variance.array() + kLayerNormEpsilon).rsqrt();
  cache.normalized = centered.array().colwise() * cache.inv_std.array();
  Matrix out = cache.normalized.array().rowwise() * scale.row(0).array();
  out.rowwise() += shift.row(0);
  return out;
}

Matrix layer_norm_backward(const Matrix& grad_out, const Matrix& scale, const NormCache& cache,
                           Matrix& grad_scale, Matrix& grad_shift) {
  const double width = static_cast<double>(grad_out.cols());
  grad_scale.row(0) += (grad_out.array() * cache.normalized.array()).colwise().sum().matrix();
  grad_shift.row(0) += grad_out.colwise().sum();
  const Matrix grad_norm = grad_out.array().rowwise() * scale.row(0).array();
  const Vector sum_grad = grad_norm.rowwise().sum();
  const Vector sum_grad_x = (grad_norm.array() * cache.normalized.array()).rowwise().sum();
  Matrix grad_in = (width * grad_norm.array()).colwise() - sum_grad.array();
  grad_in.array() -= cache.normalized.array().colwise() * sum_grad_x.array();
  grad_in.array().colwise() *= cache.inv_std.array() / width;
  return grad_in;
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

void validate_input(std::span<const int> ids, std::span<const int> segments, const EncoderConfig& config) {
  if (ids.empty()) throw LengthError("cannot encode an empty sequence");
  if (ids.size() > static_cast<std::size_t>(config.max_seq_len)) {
    throw LengthError("sequence length " + std::to_string(ids.size()) + " exceeds max_seq_len " +
                      std::to_string(config.max_seq_len));
  }
  if (segments.size() != ids.size()) {
    throw LengthError("segment ids length " + std::to_string(segments.size()) +
                      " does not match token ids length " + std::to_string(ids.size()));
  }
  for (int id : ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(config.vocab_size));
    }
  }
  for (int s : segments) {
    if (s != 0 && s != 1) throw LengthError("segment ids must be 0 or 1");
  }
}

Matrix embed(std::span<const int> ids, std::span<const int> segments, const WideParams& p) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix x(n, p.token_embedding.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = p.token_embedding.row(ids[static_cast<std::size_t>(i)]) + p.position_embedding.row(i) +
               p.segment_embedding.row(segments[static_cast<std::size_t>(i)]);
  }
  return x;
}

Matrix layer_forward(const Matrix& x, const LayerTensors<double>& w, const EncoderConfig& config,
                     LayerCache& cache) {
  const int heads = config.num_heads;
  const int dk = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  cache.input = x;
  cache.query.noalias() = x * w.query_weight;
  cache.query.rowwise() += w.query_bias.row(0);
  cache.key.noalias() = x * w.key_weight;
  cache.key.rowwise() += w.key_bias.row(0);
  cache.value.noalias() = x * w.value_weight;
  cache.value.rowwise() += w.value_bias.row(0);

  cache.probs.resize(static_cast<std::size_t>(heads));
  cache.context.resize(x.rows(), x.cols());
  for (int h = 0; h < heads; ++h) {
    Matrix& probs = cache.probs[static_cast<std::size_t>(h)];
    probs.noalias() = cache.query.middleCols(h * dk, dk) * cache.key.middleCols(h * dk, dk).transpose();
    probs *= scale;
    softmax_rows(probs);
    cache.context.middleCols(h * dk, dk).noalias() = probs * cache.value.middleCols(h * dk, dk);
  }

  Matrix residual = x;
  residual.noalias() += cache.context * w.output_weight;
  residual.rowwise() += w.output_bias.row(0);
  cache.hidden1 = layer_norm(residual, w.attention_norm_scale, w.attention_norm_shift, cache.norm1);

  cache.ffn_pre.noalias() = cache.hidden1 * w.ffn_in_weight;
  cache.ffn_pre.rowwise() += w.ffn_in_bias.row(0);
  cache.ffn_act = cache.ffn_pre.cwiseMax(0.0);
  Matrix residual2 = cache.hidden1;
  residual2.noalias() += cache.ffn_act * w.ffn_out_weight;
  residual2.rowwise() += w.ffn_out_bias.row(0);
  return layer_norm(residual2, w.ffn_norm_scale, w.ffn_norm_shift, cache.norm2);
}

Matrix layer_backward(const Matrix& grad_out, const LayerTensors<double>& w, const EncoderConfig& config,
                      const LayerCache& cache, LayerTensors<double>& g) {
  const int heads = config.num_heads;
  const int dk = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  const Matrix grad_res2 = layer_norm_backward(grad_out, w.ffn_norm_scale, cache.norm2, g.ffn_norm_scale,
                                               g.ffn_norm_shift);
  g.ffn_out_weight.noalias() += cache.ffn_act.transpose() * grad_res2;
  g.ffn_out_bias.row(0) += grad_res2.colwise().sum();
  Matrix grad_pre = grad_res2 * w.ffn_out_weight.transpose();
  grad_pre.array() *= (cache.ffn_pre.array() > 0.0).cast<double>();
  g.ffn_in_weight.noalias() += cache.hidden1.transpose() * grad_pre;
  g.ffn_in_bias.row(0) += grad_pre.colwise().sum();
  Matrix grad_hidden1 = grad_res2;
  grad_hidden1.noalias() += grad_pre * w.ffn_in_weight.transpose();

  const Matrix grad_res1 = layer_norm_backward(grad_hidden1, w.attention_norm_scale, cache.norm1,
                                               g.attention_norm_scale, g.attention_norm_shift);
  g.output_weight.noalias() += cache.context.transpose() * grad_res1;
  g.output_bias.row(0) += grad_res1.colwise().sum();
  const Matrix grad_context = grad_res1 * w.output_weight.transpose();

  Matrix grad_q = Matrix::Zero(cache.query.rows(), cache.query.cols());
  Matrix grad_k = Matrix::Zero(cache.key.rows(), cache.key.cols());
  Matrix grad_v = Matrix::Zero(cache.value.rows(), cache.value.cols());
  for (int h = 0; h < heads; ++h) {
    const Matrix& probs = cache.probs[static_cast<std::size_t>(h)];
    const auto grad_ctx_h = grad_context.middleCols(h * dk, dk);
    Matrix grad_probs = grad_ctx_h * cache.value.middleCols(h * dk, dk).transpose();
    grad_v.middleCols(h * dk, dk).noalias() = probs.transpose() * grad_ctx_h;
    const Vector row_dot = (grad_probs.array() * probs.array()).rowwise().sum();
    Matrix grad_scores = probs.array() * (grad_probs.array().colwise() - row_dot.array());
    grad_scores *= scale;
    grad_q.middleCols(h * dk, dk).noalias() = grad_scores * cache.key.middleCols(h * dk, dk);
    grad_k.middleCols(h * dk, dk).noalias() = grad_scores.transpose() * cache.query.middleCols(h * dk, dk);
  }

  Matrix grad_x = grad_res1;
  g.query_weight.noalias() += cache.input.transpose() * grad_q;
  g.query_bias.row(0) += grad_q.colwise().sum();
  grad_x.noalias() += grad_q * w.query_weight.transpose();
  g.key_weight.noalias() += cache.input.transpose() * grad_k;
  g.key_bias.row(0) += grad_k.colwise().sum();
  grad_x.noalias() += grad_k * w.key_weight.transpose();
  g.value_weight.noalias() += cache.input.transpose() * grad_v;
  g.value_bias.row(0) += grad_v.colwise().sum();
  grad_x.noalias() += grad_v * w.value_weight.transpose();
  return grad_x;
}

void run_forward(std::span<const int> ids, std::span<const int> segments, const WideParams& p,
                 const EncoderConfig& config, Trace& trace) {
  validate_input(ids, segments, config);
  trace.layers.resize(static_cast<std::size_t>(config.num_layers));
  Matrix x = embed(ids, segments, p);
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    x = layer_forward(x, p.layers[l], config, trace.layers[l]);
  }
  trace.final_hidden = std::move(x);
}

RowVector pool_row(const RowVector& hidden, const WideParams& p) {
  RowVector z = hidden * p.pooler_weight;
  z += p.pooler_bias.row(0);
  return z.array().tanh().matrix();
}

}  // namespace

Encoder::Encoder(const EncoderParams& params, const EncoderConfig& config)
    : Encoder(params.cast<double>(), config) {}

Encoder::Encoder(WideParams params, const EncoderConfig& config)
    : config_(config), params_(std::move(params)) {
  config_.validate();
}

ForwardOutput Encoder::encode(std::span<const int> ids, std::span<const int> segments) const {
  Trace trace;
  run_forward(ids, segments, params_, config_, trace);
  const std::size_t n = ids.size();
  ForwardOutput out;
  out.attention = AttentionTensor(trace.layers.size(), static_cast<std::size_t>(config_.num_heads), n);
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    out.hidden_states.push_back(std::move(trace.layers[l].input));
    for (std::size_t h = 0; h < trace.layers[l].probs.size(); ++h) {
      out.attention.head_matrix(l, h) = trace.layers[l].probs[h];
    }
  }
  out.hidden_states.push_back(trace.final_hidden);
  out.pooled = pool_row(trace.final_hidden.row(0), params_);
  return out;
}

RowVector Encoder::pool(const RowVector& hidden) const { return pool_row(hidden, params_); }

RowVector Encoder::mlm_logits(const RowVector& hidden) const {
  RowVector logits = hidden * params_.mlm_weight;
  logits += params_.mlm_bias.row(0);
  return logits;
}

std::vector<int> Encoder::predict(std::span<const int> ids, std::span<const int> segments,
                                  std::span<const std::size_t> positions) const {
  Trace trace;
  run_forward(ids, segments, params_, config_, trace);
  std::vector<int> predicted;
  predicted.reserve(positions.size());
  for (std::size_t pos : positions) {
    if (pos >= ids.size()) throw LengthError("masked position " + std::to_string(pos) + " outside sequence");
    const RowVector logits = mlm_logits(trace.final_hidden.row(static_cast<Eigen::Index>(pos)));
    predicted.push_back(argmax_lowest({logits.data(), static_cast<std::size_t>(logits.size())}));
  }
  return predicted;
}

ForwardOutput encode(std::span<const int> ids, std::span<const int> segments, const EncoderParams& params,
                     const EncoderConfig& config) {
  return Encoder(params, config).encode(ids, segments);
}

std::vector<int> mlm_predict(std::span<const int> masked_ids, std::span<const std::size_t> positions,
                             const EncoderParams& params, const EncoderConfig& config) {
  const std::vector<int> segments(masked_ids.size(), 0);
  return Encoder(params, config).predict(masked_ids, segments, positions);
}

LossBreakdown compute_loss(std::span<const TrainingExample> batch, const WideParams& params,
                           const EncoderConfig& config, ParamGradients* gradients) {
  LossBreakdown result;
  if (batch.empty()) throw Error("empty training batch");
  for (const auto& example : batch) {
    if (example.mlm_positions.size() != example.mlm_targets.size()) {
      throw Error("MLM positions and targets differ in length");
    }
    result.mlm_total += example.mlm_positions.size();
  }
  result.nsp_total = batch.size();
  const double mlm_scale = result.mlm_total > 0 ? 1.0 / static_cast<double>(result.mlm_total) : 0.0;
  const double nsp_scale = 1.0 / static_cast<double>(batch.size());

  if (gradients) *gradients = ParamGradients::zeros(config);

  Trace trace;
  for (const auto& example : batch) {
    run_forward(example.ids, example.segments, params, config, trace);
    const Matrix& top = trace.final_hidden;
    Matrix grad_top = Matrix::Zero(top.rows(), top.cols());

    // Masked language modelling head.
    const auto m = static_cast<Eigen::Index>(example.mlm_positions.size());
    if (m > 0) {
      Matrix gathered(m, top.cols());
      for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t pos = example.mlm_positions[static_cast<std::size_t>(r)];
        if (pos >= example.ids.size()) throw LengthError("MLM position outside sequence");
        gathered.row(r) = top.row(static_cast<Eigen::Index>(pos));
      }
      Matrix logits = gathered * params.mlm_weight;
      logits.rowwise() += params.mlm_bias.row(0);
      for (Eigen::Index r = 0; r < m; ++r) {
        const int target = example.mlm_targets[static_cast<std::size_t>(r)];
        if (target < 0 || target >= config.vocab_size) throw VocabularyError("MLM target outside vocabulary");
        if (argmax_lowest({logits.row(r).data(), static_cast<std::size_t>(logits.cols())}) == target) {
          ++result.mlm_correct;
        }
      }
      softmax_rows(logits);
      for (Eigen::Index r = 0; r < m; ++r) {
        const int target = example.mlm_targets[static_cast<std::size_t>(r)];
        result.mlm_loss -= std::log(std::max(logits(r, target), 1e-300)) * mlm_scale;
        logits(r, target) -= 1.0;
      }
      if (gradients) {
        logits *= mlm_scale;
        gradients->mlm_weight.noalias() += gathered.transpose() * logits;
        gradients->mlm_bias.row(0) += logits.colwise().sum();
        const Matrix grad_gathered = logits * params.mlm_weight.transpose();
        for (Eigen::Index r = 0; r < m; ++r) {
          grad_top.row(static_cast<Eigen::Index>(example.mlm_positions[static_cast<std::size_t>(r)])) +=
              grad_gathered.row(r);
        }
      }
    }

    // Next sentence prediction head over the pooled first position.
    const RowVector pooled = pool_row(top.row(0), params);
    RowVector nsp = pooled * params.nsp_weight;
    nsp += params.nsp_bias.row(0);
    const int label = example.nsp_label != 0 ? 1 : 0;
    if (argmax_lowest({nsp.data(), 2}) == label) ++result.nsp_correct;
    nsp.array() -= nsp.maxCoeff();
    nsp = nsp.array().exp().matrix();
    nsp /= nsp.sum();
    result.nsp_loss -= std::log(std::max(nsp(label), 1e-300)) * nsp_scale;

    if (gradients) {
      nsp(label) -= 1.0;
      nsp *= nsp_scale;
      gradients->nsp_weight.noalias() += pooled.transpose() * nsp;
      gradients->nsp_bias.row(0) += nsp;
      RowVector grad_pooled = nsp * params.nsp_weight.transpose();
      RowVector grad_z = grad_pooled.array() * (1.0 - pooled.array().square());
      gradients->pooler_weight.noalias() += top.row(0).transpose() * grad_z;
      gradients->pooler_bias.row(0) += grad_z;
      grad_top.row(0).noalias() += grad_z * params.pooler_weight.transpose();

      Matrix grad = std::move(grad_top);
      for (std::size_t l = trace.layers.size(); l-- > 0;) {
        grad = layer_backward(grad, params.layers[l], config, trace.layers[l], gradients->layers[l]);
      }
      for (std::size_t i = 0; i < example.ids.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        gradients->token_embedding.row(example.ids[i]) += grad.row(row);
        gradients->position_embedding.row(row) += grad.row(row);
        gradients->segment_embedding.row(example.segments[i]) += grad.row(row);
      }
    }
  }
  return result;
}

}  // namespace codeattn
