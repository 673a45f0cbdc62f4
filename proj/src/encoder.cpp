#include "mcl/encoder.hpp"

#include <cmath>

#include "mcl/errors.hpp"
#include "mcl/ops.hpp"
#include "mcl/rng.hpp"

namespace mcl {

std::size_t EncoderConfig::stride_product() const {
  std::size_t s = 1;
  for (const auto& l : layers) s *= l.stride;
  return s;
}

std::size_t EncoderConfig::feature_dim() const { return layers.empty() ? in_channels : layers.back().out_channels; }

std::size_t EncoderConfig::output_extent(std::size_t input_extent) const {
  std::size_t e = input_extent;
  for (const auto& l : layers) {
    const std::size_t pad = (l.kernel - 1) / 2;
    if (e + 2 * pad < l.kernel) return 0;
    e = (e + 2 * pad - l.kernel) / l.stride + 1;
  }
  return e;
}

void EncoderConfig::validate() const {
  if (in_channels == 0) throw ConfigError("encoder needs at least one input channel");
  if (layers.empty()) throw ConfigError("encoder needs at least one conv layer");
  for (const auto& l : layers) {
    if (l.kernel == 0 || l.stride == 0 || l.out_channels == 0) {
      throw ConfigError("conv layers need kernel, stride and channels >= 1");
    }
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in [0, 1)");
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  EncoderParams p;
  p.config = config;
  Rng rng(seed);
  std::size_t cin = config.in_channels;
  for (const auto& l : config.layers) {
    Tensor k({l.kernel, l.kernel, cin, l.out_channels});
    const double bound = std::sqrt(6.0 / static_cast<double>(l.kernel * l.kernel * cin));
    for (auto& v : k.storage()) v = rng.uniform(-bound, bound);
    p.kernels.push_back(std::move(k));
    p.biases.emplace_back(Dims{l.out_channels});
    cin = l.out_channels;
  }
  return p;
}

EncoderVars bind(Tape& tape, const std::string& prefix, const EncoderParams& params) {
  EncoderVars v;
  for (std::size_t i = 0; i < params.kernels.size(); ++i) {
    const std::string base = prefix + ".conv" + std::to_string(i);
    v.kernels.push_back(tape.parameter(base + ".kernel", params.kernels[i]));
    v.biases.push_back(tape.parameter(base + ".bias", params.biases[i]));
  }
  return v;
}

EncodedGrid encode(const EncoderConfig& config, const EncoderVars& vars, Var image) {
  const Tensor& img = image.value();
  if (img.rank() != 3 || img.dim(2) != config.in_channels) {
    throw DimensionError("encode: expected [H, W, " + std::to_string(config.in_channels) + "] input, got " +
                         dims_to_string(img.dims()));
  }
  if (vars.kernels.size() != config.layers.size()) throw DimensionError("encode: parameter count mismatch");
  Var h = image;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    h = conv2d(h, vars.kernels[i], vars.biases[i], config.layers[i].stride);
    if (i + 1 < config.layers.size()) h = leaky_relu(h, config.leaky_slope);
  }
  const std::size_t oh = h.value().dim(0), ow = h.value().dim(1), c = h.value().dim(2);
  return {l2_normalize_rows(reshape(h, {oh * ow, c})), oh, ow};
}

}  // namespace mcl
