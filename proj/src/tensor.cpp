#include "gcnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "gcnet/error.hpp"

namespace gcnet {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  for (auto d : shape_)
    require(d > 0, ErrorKind::Input, "tensor dimensions must be positive, got " +
                                         shape_string(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    require(d > 0, ErrorKind::Input, "tensor dimensions must be positive, got " +
                                         shape_string(shape_));
  require(shape_size(shape_) == data_.size(), ErrorKind::Input,
          "tensor shape " + shape_string(shape_) + " does not match " +
              std::to_string(data_.size()) + " values");
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == data_.size(), ErrorKind::Input,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  require(rank() >= 1 && begin < end && end <= shape_[0], ErrorKind::Input,
          "row slice out of range");
  const std::size_t row = data_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = end - begin;
  return Tensor(std::move(shape),
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * row),
                                    data_.begin() + static_cast<std::ptrdiff_t>(end * row)));
}

Mask::Mask(Shape shape, bool keep)
    : shape_(std::move(shape)), keep_(shape_size(shape_), keep ? 1 : 0) {}

Mask::Mask(Shape shape, std::vector<std::uint8_t> keep)
    : shape_(std::move(shape)), keep_(std::move(keep)) {
  require(shape_size(shape_) == keep_.size(), ErrorKind::Input,
          "mask shape " + shape_string(shape_) + " does not match " +
              std::to_string(keep_.size()) + " entries");
  for (auto& k : keep_) k = k ? 1 : 0;
}

std::size_t Mask::pruned_count() const {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), 0));
}

double Mask::sparsity() const {
  return keep_.empty() ? 0.0
                       : static_cast<double>(pruned_count()) /
                             static_cast<double>(keep_.size());
}

}  // namespace gcnet
