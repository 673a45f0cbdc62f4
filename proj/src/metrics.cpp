#include "mcl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mcl/errors.hpp"

namespace mcl {

namespace {
void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw DimensionError(std::string(what) + ": dims " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
  }
}
}  // namespace

double mean_l1(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mean_l1");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double psnr(const Tensor& a, const Tensor& b, double max_value) {
  check_same(a, b, "psnr");
  if (!(max_value > 0.0)) throw ConfigError("psnr: max_value must be > 0");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return 10.0 * std::log10(max_value * max_value / mse);
}

double ssim(const Tensor& a, const Tensor& b, double max_value) {
  check_same(a, b, "ssim");
  if (a.rank() != 3) throw DimensionError("ssim expects [H, W, C] images");
  const std::size_t h = a.dim(0), w = a.dim(1), c = a.dim(2);
  const std::size_t wh = std::min(kSsimWindow, h), ww = std::min(kSsimWindow, w);
  const double c1 = (0.01 * max_value) * (0.01 * max_value);
  const double c2 = (0.03 * max_value) * (0.03 * max_value);
  const double count = static_cast<double>(wh * ww);

  double channel_total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    double window_total = 0.0;
    std::size_t windows = 0;
    for (std::size_t y0 = 0; y0 + wh <= h; ++y0) {
      for (std::size_t x0 = 0; x0 + ww <= w; ++x0) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t y = y0; y < y0 + wh; ++y)
          for (std::size_t x = x0; x < x0 + ww; ++x) {
            sa += a[(y * w + x) * c + k];
            sb += b[(y * w + x) * c + k];
          }
        const double ma = sa / count, mb = sb / count;
        double vaa = 0.0, vbb = 0.0, vab = 0.0;
        for (std::size_t y = y0; y < y0 + wh; ++y)
          for (std::size_t x = x0; x < x0 + ww; ++x) {
            const double da = a[(y * w + x) * c + k] - ma;
            const double db = b[(y * w + x) * c + k] - mb;
            vaa += da * da;
            vbb += db * db;
            vab += da * db;
          }
        vaa /= count;
        vbb /= count;
        vab /= count;
        window_total += ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) / ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
        ++windows;
      }
    }
    channel_total += window_total / static_cast<double>(windows);
  }
  return channel_total / static_cast<double>(c);
}

double top1_accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw DimensionError("top1_accuracy: size mismatch or empty input");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace mcl
