#pragma once

#include <filesystem>

#include "mcl/tensor.hpp"

namespace mcl {

// Images are [H, W, C] tensors with C in {1, 3} and nominal range [0, 1].
// They are stored as binary PGM (P5, C = 1) or PPM (P6, C = 3), maxval 255;
// values are clamped to [0, 1] and rounded to the nearest 8-bit level.
void write_pnm(const std::filesystem::path& path, const Tensor& image);
Tensor read_pnm(const std::filesystem::path& path);

// Each pixel repeated factor x factor times.
Tensor upsample_nearest(const Tensor& image, std::size_t factor);

// Affine map of a rank-2 tensor onto [0, 1] for heatmap dumps ([H, W, 1] output).
Tensor heatmap(const Tensor& m);

}  // namespace mcl
