#include "mcl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcl/errors.hpp"

namespace mcl {

std::size_t dims_product(const Dims& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ", ";
    os << dims[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Dims dims) : dims_(std::move(dims)) {
  for (auto d : dims_) {
    if (d == 0) throw DimensionError("tensor dims must be positive, got " + dims_to_string(dims_));
  }
  data_.assign(dims_product(dims_), 0.0);
}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  for (auto d : dims_) {
    if (d == 0) throw DimensionError("tensor dims must be positive, got " + dims_to_string(dims_));
  }
  if (dims_product(dims_) != data_.size()) {
    throw DimensionError("tensor dims " + dims_to_string(dims_) + " do not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::filled(Dims dims, double v) {
  Tensor t(std::move(dims));
  t.fill(v);
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) throw UsageError("item() on tensor of size " + std::to_string(data_.size()));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Dims dims) const {
  if (dims_product(dims) != data_.size()) {
    throw DimensionError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
  }
  return Tensor(std::move(dims), data_);
}

Tensor Tensor::transposed() const {
  if (rank() != 2) throw DimensionError("transpose needs a rank-2 tensor");
  Tensor out({cols(), rows()});
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c) out.at(c, r) = at(r, c);
  return out;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

FeatureGrid::FeatureGrid(std::size_t h, std::size_t w, std::size_t c)
    : height(h), width(w), channels(c), tensor(Dims{h * w, c}) {
  if (h == 0 || w == 0 || c == 0) throw DimensionError("feature grid extents must be >= 1");
}

FeatureGrid::FeatureGrid(std::size_t h, std::size_t w, Tensor t)
    : height(h), width(w), channels(0), tensor(std::move(t)) {
  if (h == 0 || w == 0) throw DimensionError("feature grid extents must be >= 1");
  if (tensor.rank() != 2 || tensor.rows() != h * w) {
    throw DimensionError("feature grid tensor must be [" + std::to_string(h * w) + ", C], got " +
                         dims_to_string(tensor.dims()));
  }
  channels = tensor.cols();
}

}  // namespace mcl
