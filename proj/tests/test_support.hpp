#pragma once

#include <vector>

#include "codeattn/encoder.hpp"
#include "codeattn/rng.hpp"

namespace codeattn::fixtures {

inline EncoderConfig tiny_config(int layers = 1, int heads = 2, int hidden = 8, int vocab = 12, int max_len = 10) {
  EncoderConfig c;
  c.num_layers = layers;
  c.num_heads = heads;
  c.hidden_dim = hidden;
  c.ffn_dim = 2 * hidden;
  c.max_seq_len = max_len;
  c.vocab_size = vocab;
  c.seed = 7;
  return c;
}

// Every tensor filled with normal(0, scale) noise; large enough that the
// attention is far from uniform and ReLU units are mixed.
template <typename Scalar>
ParamTensors<Scalar> noisy_params(const EncoderConfig& config, std::uint64_t seed, double scale) {
  ParamTensors<Scalar> p = ParamTensors<Scalar>::zeros(config);
  Rng rng(seed);
  p.visit([&](const std::string& name, TensorOf<Scalar>& t) {
    const bool is_scale = name.ends_with(".scale");
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<Scalar>((is_scale ? 1.0 : 0.0) + scale * rng.normal());
    }
  });
  return p;
}

inline std::vector<int> random_ids(Rng& rng, std::size_t n, int vocab) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = static_cast<int>(rng.below(static_cast<std::size_t>(vocab)));
  return ids;
}

}  // namespace codeattn::fixtures
