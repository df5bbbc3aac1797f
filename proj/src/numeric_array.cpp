#include "pjem/numeric_array.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pjem {

namespace {

Eigen::Index checked_size(const std::vector<int>& shape) {
  if (shape.empty()) throw std::invalid_argument("NumericArray: shape must have at least one extent");
  Eigen::Index total = 1;
  for (int extent : shape) {
    if (extent <= 0) throw std::invalid_argument("NumericArray: extents must be positive, got " + shape_string(shape));
    total *= extent;
  }
  return total;
}

}  // namespace

NumericArray::NumericArray(std::vector<int> shape, Vector data)
    : shape_(std::move(shape)), data_(std::move(data)) {}

NumericArray NumericArray::zeros(std::vector<int> shape) {
  Eigen::Index total = checked_size(shape);
  return {std::move(shape), Vector::Zero(total)};
}

NumericArray NumericArray::uninitialized(std::vector<int> shape) {
  Eigen::Index total = checked_size(shape);
  return {std::move(shape), Vector(total)};
}

NumericArray NumericArray::scalar(double value) {
  Vector data(1);
  data[0] = value;
  return {{1}, std::move(data)};
}

NumericArray NumericArray::from_vector(const Vector& values) {
  if (values.size() == 0) throw std::invalid_argument("NumericArray: empty vector");
  return {{static_cast<int>(values.size())}, values};
}

NumericArray NumericArray::from_matrix(const Matrix& values) {
  if (values.size() == 0) throw std::invalid_argument("NumericArray: empty matrix");
  Vector flat = Eigen::Map<const Vector>(values.data(), values.size());
  return {{static_cast<int>(values.rows()), static_cast<int>(values.cols())}, std::move(flat)};
}

NumericArray NumericArray::from_values(std::vector<int> shape, std::vector<double> values) {
  Eigen::Index total = checked_size(shape);
  if (total != static_cast<Eigen::Index>(values.size())) {
    throw std::invalid_argument("NumericArray: " + shape_string(shape) + " needs " + std::to_string(total) +
                                " values, got " + std::to_string(values.size()));
  }
  return {std::move(shape), Eigen::Map<const Vector>(values.data(), total)};
}

int NumericArray::rows() const {
  if (rank() != 2) throw std::logic_error("NumericArray: rows() on rank-" + std::to_string(rank()) + " array");
  return shape_[0];
}

int NumericArray::cols() const {
  if (rank() != 2) throw std::logic_error("NumericArray: cols() on rank-" + std::to_string(rank()) + " array");
  return shape_[1];
}

Eigen::Map<Matrix> NumericArray::mat() {
  return {data_.data(), rows(), cols()};
}

Eigen::Map<const Matrix> NumericArray::mat() const {
  return {data_.data(), rows(), cols()};
}

double NumericArray::value() const {
  if (!is_scalar()) throw std::logic_error("NumericArray: value() on non-scalar of shape " + shape_string(shape_));
  return data_[0];
}

bool NumericArray::all_finite() const {
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) return false;
  }
  return true;
}

Matrix NumericArray::to_matrix() const {
  return mat();
}

Vector NumericArray::to_vector() const { return data_; }

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

}  // namespace pjem
