#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gcnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  double at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  // Start of the [a, b, :, :] plane of a 4-d tensor.
  double* plane(std::size_t a, std::size_t b) {
    return data_.data() + (a * shape_[1] + b) * shape_[2] * shape_[3];
  }
  const double* plane(std::size_t a, std::size_t b) const {
    return data_.data() + (a * shape_[1] + b) * shape_[2] * shape_[3];
  }

  // Same data viewed with a new shape of equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(double value);
  bool all_finite() const;

  // Rows [begin, end) along the first axis.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Boolean keep-mask with the shape of the weights it guards.
// keep[i] == 0 marks a pruned (frozen at zero) position.
class Mask {
 public:
  Mask() = default;
  explicit Mask(Shape shape, bool keep = true);
  Mask(Shape shape, std::vector<std::uint8_t> keep);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return keep_.size(); }
  bool kept(std::size_t i) const { return keep_[i] != 0; }
  void set(std::size_t i, bool keep) { keep_[i] = keep ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return keep_; }

  std::size_t pruned_count() const;
  // Fraction of pruned entries.
  double sparsity() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> keep_;
};

}  // namespace gcnet
