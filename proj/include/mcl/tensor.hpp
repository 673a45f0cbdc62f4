#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mcl {

using Dims = std::vector<std::size_t>;

std::size_t dims_product(const Dims& dims);
std::string dims_to_string(const Dims& dims);

// Dense row-major array of doubles. An empty dims list denotes a scalar.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Dims dims);
  Tensor(Dims dims, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({}, {v}); }
  static Tensor filled(Dims dims, double v);

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 accessors.
  std::size_t rows() const { return dims_.at(0); }
  std::size_t cols() const { return dims_.at(1); }
  double& at(std::size_t r, std::size_t c) { return data_[r * dims_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * dims_[1] + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * dims_[1], dims_[1]}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * dims_[1], dims_[1]};
  }

  double item() const;
  void fill(double v);
  Tensor reshaped(Dims dims) const;
  Tensor transposed() const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

// N = height*width feature vectors of dimension `channels`, stored as a
// [N, channels] tensor in row-major grid order.
struct FeatureGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  Tensor tensor;

  FeatureGrid() = default;
  FeatureGrid(std::size_t h, std::size_t w, std::size_t c);
  FeatureGrid(std::size_t h, std::size_t w, Tensor t);

  std::size_t positions() const { return height * width; }
};

}  // namespace mcl
