#include "mcl/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "mcl/errors.hpp"

namespace mcl {

void write_pnm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3)) {
    throw DimensionError("write_pnm: expected [H, W, 1|3], got " + dims_to_string(image.dims()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << (image.dim(2) == 1 ? "P5" : "P6") << '\n' << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::string bytes(image.size(), '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t header_number(std::istream& in, const std::string& path) {
  const std::string tok = header_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError(path + ": bad PNM header field '" + tok + "'");
  }
  return std::stoul(tok);
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string magic = header_token(in);
  std::size_t channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(path.string() + ": not a binary PGM/PPM file");
  }
  const std::size_t w = header_number(in, path.string());
  const std::size_t h = header_number(in, path.string());
  const std::size_t maxval = header_number(in, path.string());
  if (w == 0 || h == 0 || maxval != 255) {
    throw FormatError(path.string() + ": only non-empty images with maxval 255 are supported");
  }
  std::string bytes(w * h * channels, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw FormatError(path.string() + ": truncated pixel data");
  Tensor img({h, w, channels});
  for (std::size_t i = 0; i < bytes.size(); ++i) img[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  return img;
}

Tensor upsample_nearest(const Tensor& image, std::size_t factor) {
  if (image.rank() != 3 || factor == 0) throw DimensionError("upsample_nearest: expected [H, W, C] and factor >= 1");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out({h * factor, w * factor, c});
  for (std::size_t y = 0; y < h * factor; ++y)
    for (std::size_t x = 0; x < w * factor; ++x)
      for (std::size_t k = 0; k < c; ++k) out[(y * w * factor + x) * c + k] = image[((y / factor) * w + x / factor) * c + k];
  return out;
}

Tensor heatmap(const Tensor& m) {
  if (m.rank() != 2) throw DimensionError("heatmap needs a rank-2 tensor");
  const auto [lo, hi] = std::minmax_element(m.storage().begin(), m.storage().end());
  const double span = *hi - *lo;
  Tensor out({m.rows(), m.cols(), 1});
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = span > 0.0 ? (m[i] - *lo) / span : 0.0;
  return out;
}

}  // namespace mcl
