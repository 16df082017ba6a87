#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace codeattn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Attention probabilities indexed [layer][head][source][target].
class AttentionTensor {
 public:
  AttentionTensor() = default;
  AttentionTensor(std::size_t layers, std::size_t heads, std::size_t seq_len);

  std::size_t layers() const { return layers_; }
  std::size_t heads() const { return heads_; }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t head_count() const { return layers_ * heads_; }

  double at(std::size_t layer, std::size_t head, std::size_t source, std::size_t target) const {
    return values_[offset(layer, head) + source * seq_len_ + target];
  }
  double& at(std::size_t layer, std::size_t head, std::size_t source, std::size_t target) {
    return values_[offset(layer, head) + source * seq_len_ + target];
  }

  std::span<const double> row(std::size_t layer, std::size_t head, std::size_t source) const {
    return {values_.data() + offset(layer, head) + source * seq_len_, seq_len_};
  }

  using MapType = Eigen::Map<Matrix>;
  using ConstMapType = Eigen::Map<const Matrix>;

  MapType head_matrix(std::size_t layer, std::size_t head) {
    return MapType(values_.data() + offset(layer, head), static_cast<Eigen::Index>(seq_len_),
                   static_cast<Eigen::Index>(seq_len_));
  }
  ConstMapType head_matrix(std::size_t layer, std::size_t head) const {
    return ConstMapType(values_.data() + offset(layer, head), static_cast<Eigen::Index>(seq_len_),
                        static_cast<Eigen::Index>(seq_len_));
  }

  // Largest |row sum - 1| over all rows.
  double max_row_deviation() const;
  bool has_negative() const;

  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t offset(std::size_t layer, std::size_t head) const {
    return (layer * heads_ + head) * seq_len_ * seq_len_;
  }

  std::size_t layers_ = 0;
  std::size_t heads_ = 0;
  std::size_t seq_len_ = 0;
  std::vector<double> values_;
};

}  // namespace codeattn
