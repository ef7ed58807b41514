#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lumen {

using Index = Eigen::Index;

/// Thrown whenever an input violates a shape or configuration precondition.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Batch, channel, height, width.
struct Shape {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  Index sample() const { return c * h * w; }

  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

/// Dense NCHW tensor backed by a contiguous Eigen array.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  Tensor() = default;
  explicit Tensor(const Shape& shape) : shape_(shape), data_(Array::Zero(shape.size())) {}
  Tensor(const Shape& shape, Scalar fill) : shape_(shape), data_(Array::Constant(shape.size(), fill)) {}
  Tensor(const Shape& shape, Array data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) throw ConfigError("tensor data does not match shape " + shape_.str());
  }

  static Tensor scalar(Scalar v) { return Tensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Index n, Index c, Index h, Index w) {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  Scalar operator()(Index n, Index c, Index h, Index w) const {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  Scalar item() const {
    if (data_.size() != 1) throw ConfigError("item() on tensor of shape " + shape_.str());
    return data_[0];
  }

  /// Sample `n` viewed as a (channels x pixels) row-major matrix.
  MatrixMap sample_matrix(Index n) {
    return MatrixMap(data() + n * shape_.sample(), shape_.c, shape_.plane());
  }
  ConstMatrixMap sample_matrix(Index n) const {
    return ConstMatrixMap(data() + n * shape_.sample(), shape_.c, shape_.plane());
  }

  void set_zero() { data_.setZero(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_;
  Array data_;
};

}  // namespace lumen
