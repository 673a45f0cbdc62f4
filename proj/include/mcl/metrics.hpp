#pragma once

#include <cstddef>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

// Returned by psnr() when the images are identical.
inline constexpr double kPsnrCap = 99.0;
inline constexpr std::size_t kSsimWindow = 8;

// Mean absolute difference over all elements.
double mean_l1(const Tensor& a, const Tensor& b);

// 10 log10(max_value^2 / MSE); kPsnrCap when MSE == 0.
double psnr(const Tensor& a, const Tensor& b, double max_value = 1.0);

// Windowed SSIM on [H, W, C] images: uniform 8x8 windows (clipped to the
// image extent), stride 1, C1 = (0.01 L)^2, C2 = (0.03 L)^2, population
// statistics per window. Mean over windows, then over channels.
double ssim(const Tensor& a, const Tensor& b, double max_value = 1.0);

// Fraction of positions i with predicted[i] == truth[i].
double top1_accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth);

}  // namespace mcl
