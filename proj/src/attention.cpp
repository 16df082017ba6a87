#include "codeattn/attention.hpp"

#include <algorithm>
#include <cmath>

namespace codeattn {

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t seq_len)
    : layers_(layers), heads_(heads), seq_len_(seq_len), values_(layers * heads * seq_len * seq_len, 0.0) {}

double AttentionTensor::max_row_deviation() const {
  double worst = 0.0;
  for (std::size_t l = 0; l < layers_; ++l) {
    for (std::size_t h = 0; h < heads_; ++h) {
      for (std::size_t i = 0; i < seq_len_; ++i) {
        double sum = 0.0;
        for (double v : row(l, h, i)) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
  }
  return worst;
}

bool AttentionTensor::has_negative() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return v < 0.0; });
}

}  // namespace codeattn
