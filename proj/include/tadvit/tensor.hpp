// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tadvit/error.hpp"
#include "tadvit/memory.hpp"

namespace tadvit {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

/// Dense row-major array of rank >= 1 with strictly positive dimensions.
///
/// The payload is contiguous; matrix() views it as rows() x cols() where
/// cols() is the last dimension and rows() the product of the others, which
/// is how every row-wise op (layer norm, softmax, bias) interprets it.
template <typename Scalar>
class Tensor {
 public:
  using Storage = std::vector<Scalar, memory::TrackingAllocator<Scalar>>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using ArrayMap = Eigen::Map<Array>;
  using ConstArrayMap = Eigen::Map<const Array>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(static_cast<std::size_t>(shape_size(shape_)), Scalar(0));
  }

  /// Payload left uninitialised; for outputs that are written in full.
  struct Uninitialized {};
  Tensor(Shape shape, Uninitialized) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.resize(static_cast<std::size_t>(shape_size(shape_)));
  }

  Tensor(Shape shape, Scalar fill) : Tensor(std::move(shape)) {
    std::fill(data_.begin(), data_.end(), fill);
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values) : Tensor(std::move(shape)) {
    if (static_cast<Index>(values.size()) != size()) {
      throw ShapeError("tensor " + to_string(shape_) + " needs " + std::to_string(size()) +
                       " values, got " + std::to_string(values.size()));
    }
    std::copy(values.begin(), values.end(), data_.begin());
  }

  template <typename Derived>
  static Tensor from_matrix(const Eigen::DenseBase<Derived>& m) {
    Tensor t({m.rows(), m.cols()});
    t.matrix() = m.derived().template cast<Scalar>();
    return t;
  }

  bool empty() const { return shape_.empty(); }
  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return static_cast<Index>(data_.size()); }
  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }
  Index rows() const { return shape_.empty() ? 0 : size() / cols(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }
  Scalar& operator()(Index r, Index c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  Scalar operator()(Index r, Index c) const {
    return data_[static_cast<std::size_t>(r * cols() + c)];
  }

  MatrixMap matrix() { return MatrixMap(data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data(), rows(), cols()); }
  ArrayMap array() { return ArrayMap(data(), size()); }
  ConstArrayMap array() const { return ConstArrayMap(data(), size()); }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  /// Same payload under a new shape of equal size.
  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    Tensor out = *this;
    check_shape(shape);
    out.shape_ = std::move(shape);
    return out;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.array() = array().template cast<Other>();
    return out;
  }

  /// Bitwise equality of shape and payload.
  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ &&
           std::memcmp(data(), other.data(), data_.size() * sizeof(Scalar)) == 0;
  }

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
    for (Index d : shape) {
      if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
    }
  }

  Shape shape_;
  Storage data_;
};

}  // namespace tadvit
