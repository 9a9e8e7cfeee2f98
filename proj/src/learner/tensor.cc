#include "ccil/learner/tensor.h"

#include <cmath>
#include <stdexcept>

namespace ccil::nn {

size_t ShapeSize(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), values_(ShapeSize(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != ShapeSize(shape_)) {
    throw std::invalid_argument("tensor values do not match shape");
  }
}

int Tensor::rows() const {
  if (shape_.empty()) return 1;
  return shape_.back() == 0 ? 0 : static_cast<int>(values_.size() / shape_.back());
}

int Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

void Tensor::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::Reshaped(std::vector<int> shape) const {
  return Tensor(std::move(shape), values_);
}

bool Tensor::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::SquaredNorm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

}  // namespace ccil::nn
