#pragma once

#include <string>
#include <vector>

#include "pjem/common.hpp"

namespace pjem {

// Dense row-major double array with an explicit shape. Rank 1 arrays have
// shape {n}; scalars are rank-1 arrays of length 1.
class NumericArray {
 public:
  NumericArray() = default;

  static NumericArray zeros(std::vector<int> shape);
  static NumericArray uninitialized(std::vector<int> shape);
  static NumericArray scalar(double value);
  static NumericArray from_vector(const Vector& values);           // shape {n}
  static NumericArray from_matrix(const Matrix& values);           // shape {r, c}
  static NumericArray from_values(std::vector<int> shape, std::vector<double> values);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Eigen::Index size() const { return data_.size(); }
  bool is_scalar() const { return shape_.size() == 1 && shape_[0] == 1; }

  int rows() const;  // rank-2 only
  int cols() const;  // rank-2 only

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Flat view over all elements regardless of rank.
  Eigen::Map<Vector> flat() { return {data_.data(), data_.size()}; }
  Eigen::Map<const Vector> flat() const { return {data_.data(), data_.size()}; }

  // Rank-2 view. Throws on other ranks.
  Eigen::Map<Matrix> mat();
  Eigen::Map<const Matrix> mat() const;

  double value() const;  // scalar contents; throws if not scalar

  bool same_shape(const NumericArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Matrix to_matrix() const;  // rank-2 copy
  Vector to_vector() const;  // flat copy

  void fill(double value) { data_.setConstant(value); }

 private:
  NumericArray(std::vector<int> shape, Vector data);

  std::vector<int> shape_;
  Vector data_;
};

std::string shape_string(const std::vector<int>& shape);

}  // namespace pjem
