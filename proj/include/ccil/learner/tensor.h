#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ccil::nn {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major array of doubles. Ops treat it as a matrix whose column
// count is the last dimension and whose row count is the product of the rest.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor Matrix(int rows, int cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor Scalar(double v) { return Tensor({1, 1}, v); }

  const std::vector<int>& shape() const { return shape_; }
  int rows() const;
  int cols() const;
  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }
  double& at(int r, int c) { return values_[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return values_[static_cast<size_t>(r) * cols() + c];
  }

  Eigen::Map<RowMatrix> AsMatrix() { return {data(), rows(), cols()}; }
  Eigen::Map<const RowMatrix> AsMatrix() const { return {data(), rows(), cols()}; }

  void Fill(double v);
  Tensor Reshaped(std::vector<int> shape) const;
  bool SameShape(const Tensor& o) const { return shape_ == o.shape_; }
  bool AllFinite() const;
  double SquaredNorm() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

size_t ShapeSize(const std::vector<int>& shape);

}  // namespace ccil::nn
