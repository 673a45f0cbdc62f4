#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mcl/tape.hpp"

namespace mcl {

struct ConvLayerSpec {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  std::size_t out_channels = 16;
};

// Stack of conv layers; leaky ReLU after every layer except the last, then
// per-position L2 normalization of the output features.
struct EncoderConfig {
  std::size_t in_channels = 3;
  std::vector<ConvLayerSpec> layers{{2, 2, 16}, {2, 2, 16}, {1, 1, 16}};
  double leaky_slope = 0.2;

  std::size_t stride_product() const;
  std::size_t feature_dim() const;
  // Spatial extent after the stack for an input extent.
  std::size_t output_extent(std::size_t input_extent) const;
  void validate() const;
};

struct EncoderParams {
  EncoderConfig config;
  std::vector<Tensor> kernels;  // [k, k, Cin, Cout]
  std::vector<Tensor> biases;   // [Cout]
};

// Kaiming-style uniform init: kernel entries ~ U(-sqrt(6/fan_in), sqrt(6/fan_in))
// with fan_in = k*k*Cin, drawn in layer order from Rng(seed); biases start at 0.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

// Parameters registered on a tape as "<prefix>.conv<i>.kernel" / ".bias".
struct EncoderVars {
  std::vector<Var> kernels;
  std::vector<Var> biases;
};
EncoderVars bind(Tape& tape, const std::string& prefix, const EncoderParams& params);

struct EncodedGrid {
  Var features;  // [height*width, C], unit rows
  std::size_t height = 0;
  std::size_t width = 0;
};

// image: [H, W, Cin]. Throws DimensionError on a channel mismatch.
EncodedGrid encode(const EncoderConfig& config, const EncoderVars& vars, Var image);

}  // namespace mcl
