#include "mcl/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "mcl/errors.hpp"
#include "mcl/rng.hpp"

namespace mcl {

std::string to_string(TaskKind k) { return k == TaskKind::mosaic ? "mosaic" : "gradient-shapes"; }

TaskKind parse_task_kind(const std::string& s) {
  if (s == "mosaic") return TaskKind::mosaic;
  if (s == "gradient-shapes") return TaskKind::gradient_shapes;
  throw ConfigError("unknown task '" + s + "' (expected mosaic or gradient-shapes)");
}

void TaskConfig::validate() const {
  if (grid < 2) throw ConfigError("task grid must be >= 2");
  if (cell < 2 || cell % 2 != 0) throw ConfigError("task cell size must be an even number >= 2");
  if (classes < 2 || classes > 16) throw ConfigError("task classes must lie in [2, 16]");
  if (kind == TaskKind::mosaic) {
    double patterns = std::pow(static_cast<double>(classes), 4.0);
    if (patterns < static_cast<double>(positions())) {
      throw ConfigError("mosaic task needs classes^4 >= grid^2 so every cell can be distinct");
    }
  }
}

namespace {

constexpr std::uint64_t kLayoutStream = 1;
constexpr std::uint64_t kJitterStream = 2;
constexpr std::uint64_t kPermutationStream = 3;
constexpr std::uint64_t kPaletteStream = 4;

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int sector = static_cast<int>(hh);
  const double f = hh - sector;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Texture t: a base colour plus a fixed 2x2 shading motif.
struct Texture {
  std::array<double, 3> rgb;
  std::array<double, 4> shade;
};

Texture texture(std::size_t t, std::size_t count) {
  static constexpr std::array<std::array<double, 4>, 4> motifs{{
      {0.08, -0.08, -0.08, 0.08},
      {0.08, 0.08, -0.08, -0.08},
      {0.08, -0.08, 0.08, -0.08},
      {0.0, 0.0, 0.0, 0.0},
  }};
  const double hue = static_cast<double>(t) / static_cast<double>(count);
  const double value = t % 2 == 0 ? 0.9 : 0.6;
  return {hsv_to_rgb(hue, 0.75, value), motifs[t % motifs.size()]};
}

// Class weights for the ambiguous variant: geometric, so class areas are
// well separated in expectation.
std::vector<double> class_weights(const TaskConfig& task) {
  std::vector<double> w(task.classes, 1.0);
  if (task.ambiguous) {
    for (std::size_t k = 0; k < task.classes; ++k) w[k] = std::pow(0.6, static_cast<double>(k));
  }
  return w;
}

std::size_t draw_weighted(Rng& rng, const std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (u < w[k]) return k;
    u -= w[k];
  }
  return w.size() - 1;
}

// Each cell is split into 2x2 quadrants with one label each; quadrant tuples
// are distinct across the image so every cell has a unique appearance.
std::vector<std::size_t> mosaic_labels(const TaskConfig& task, Rng& rng) {
  const std::size_t side = task.image_size(), half = task.cell / 2;
  const auto weights = class_weights(task);
  std::vector<std::size_t> labels(side * side);
  std::set<std::array<std::size_t, 4>> used;
  for (std::size_t cy = 0; cy < task.grid; ++cy) {
    for (std::size_t cx = 0; cx < task.grid; ++cx) {
      std::array<std::size_t, 4> q;
      do {
        for (auto& l : q) l = draw_weighted(rng, weights);
      } while (!used.insert(q).second);
      for (std::size_t y = 0; y < task.cell; ++y)
        for (std::size_t x = 0; x < task.cell; ++x)
          labels[(cy * task.cell + y) * side + cx * task.cell + x] = q[(y / half) * 2 + x / half];
    }
  }
  return labels;
}

// Overlapping discs and boxes on a background; label = index of the topmost shape.
std::vector<std::size_t> shape_labels(const TaskConfig& task, Rng& rng) {
  const std::size_t side = task.image_size();
  const double s = static_cast<double>(side);
  std::vector<std::size_t> labels(side * side, 0);
  for (std::size_t k = 1; k < task.classes; ++k) {
    const bool disc = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.1, 0.9) * s, cy = rng.uniform(0.1, 0.9) * s;
    const double rx = rng.uniform(0.08, 0.3) * s, ry = disc ? rx : rng.uniform(0.08, 0.3) * s;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
        const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
        const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) labels[y * side + x] = k;
      }
    }
  }
  return labels;
}

Tensor render(const TaskConfig& task, const std::vector<std::size_t>& labels, const std::vector<std::size_t>& texture_of,
              Rng& rng) {
  const std::size_t side = task.image_size();
  Tensor img({side, side, 3});
  // gradient-shapes: each class gets a random linear ramp across the image.
  std::vector<std::array<double, 3>> ramp(task.classes, {0.0, 0.0, 0.0});
  if (task.kind == TaskKind::gradient_shapes) {
    for (auto& r : ramp) {
      const double angle = rng.uniform(0.0, 2.0 * 3.141592653589793);
      r = {std::cos(angle), std::sin(angle), rng.uniform(0.15, 0.35)};
    }
  }
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t label = labels[y * side + x];
      const Texture tex = texture(texture_of[label], task.classes);
      double gain = 1.0 + tex.shade[(y % 2) * 2 + x % 2];
      if (task.kind == TaskKind::gradient_shapes) {
        const auto& r = ramp[label];
        const double u = ((static_cast<double>(x) + 0.5) / side - 0.5) * r[0] + ((static_cast<double>(y) + 0.5) / side - 0.5) * r[1];
        gain += 2.0 * r[2] * u;
      }
      for (std::size_t c = 0; c < 3; ++c) img[(y * side + x) * 3 + c] = std::clamp(tex.rgb[c] * gain, 0.0, 1.0);
    }
  }
  return img;
}

Tensor apply_jitter(const Tensor& img, Rng& rng) {
  std::array<double, 3> gain;
  for (auto& g : gain) g = rng.uniform(0.8, 1.2);
  Tensor out = img;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i] * gain[i % 3] + 0.02 * rng.normal(), 0.0, 1.0);
  return out;
}

}  // namespace

SyntheticPair generate_pair(std::uint64_t seed, const TaskConfig& task) {
  task.validate();
  Rng layout_rng(derive_seed(seed, kLayoutStream));
  Rng jitter_rng(derive_seed(seed, kJitterStream));
  Rng perm_rng(derive_seed(seed, kPermutationStream));
  Rng palette_rng(derive_seed(seed, kPaletteStream));

  SyntheticPair p;
  p.grid = task.grid;
  p.cell = task.cell;
  p.labels = task.kind == TaskKind::mosaic ? mosaic_labels(task, layout_rng) : shape_labels(task, layout_rng);

  const std::size_t side = task.image_size();
  p.condition = Tensor({side, side, task.classes});
  for (std::size_t i = 0; i < p.labels.size(); ++i) p.condition[i * task.classes + p.labels[i]] = 1.0;

  std::vector<std::size_t> texture_of(task.classes);
  std::iota(texture_of.begin(), texture_of.end(), 0);
  if (task.ambiguous) {
    for (std::size_t i = task.classes; i-- > 1;) std::swap(texture_of[i], texture_of[palette_rng.below(i + 1)]);
  }
  p.ground_truth = render(task, p.labels, texture_of, layout_rng);
  p.pseudo_target = task.jitter ? apply_jitter(p.ground_truth, jitter_rng) : p.ground_truth;

  p.true_permutation.resize(task.positions());
  std::iota(p.true_permutation.begin(), p.true_permutation.end(), 0);
  if (task.permute) {
    auto& perm = p.true_permutation;
    for (std::size_t i = perm.size(); i-- > 1;) std::swap(perm[i], perm[perm_rng.below(i + 1)]);
  }
  p.exemplar = permute_blocks(p.pseudo_target, task.cell, p.true_permutation);
  return p;
}

Tensor image_to_blocks(const Tensor& image, std::size_t cell) {
  if (image.rank() != 3 || cell == 0 || image.dim(0) % cell != 0 || image.dim(1) % cell != 0) {
    throw DimensionError("image_to_blocks: image " + dims_to_string(image.dims()) + " not divisible into cells of " +
                         std::to_string(cell));
  }
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const std::size_t gh = h / cell, gw = w / cell;
  Tensor out({gh * gw, cell * cell * c});
  for (std::size_t by = 0; by < gh; ++by)
    for (std::size_t bx = 0; bx < gw; ++bx)
      for (std::size_t y = 0; y < cell; ++y)
        for (std::size_t x = 0; x < cell; ++x)
          for (std::size_t k = 0; k < c; ++k)
            out.at(by * gw + bx, (y * cell + x) * c + k) = image[((by * cell + y) * w + bx * cell + x) * c + k];
  return out;
}

Tensor blocks_to_image(const Tensor& blocks, std::size_t grid, std::size_t cell, std::size_t channels) {
  if (blocks.rank() != 2 || blocks.rows() != grid * grid || blocks.cols() != cell * cell * channels) {
    throw DimensionError("blocks_to_image: blocks " + dims_to_string(blocks.dims()) + " do not match grid/cell/channels");
  }
  const std::size_t side = grid * cell;
  Tensor img({side, side, channels});
  for (std::size_t by = 0; by < grid; ++by)
    for (std::size_t bx = 0; bx < grid; ++bx)
      for (std::size_t y = 0; y < cell; ++y)
        for (std::size_t x = 0; x < cell; ++x)
          for (std::size_t k = 0; k < channels; ++k)
            img[((by * cell + y) * side + bx * cell + x) * channels + k] = blocks.at(by * grid + bx, (y * cell + x) * channels + k);
  return img;
}

Tensor permute_blocks(const Tensor& image, std::size_t cell, const std::vector<std::size_t>& permutation) {
  const Tensor blocks = image_to_blocks(image, cell);
  if (permutation.size() != blocks.rows()) throw DimensionError("permute_blocks: permutation size mismatch");
  Tensor moved(blocks.dims());
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    std::copy(blocks.row(i).begin(), blocks.row(i).end(), moved.row(permutation.at(i)).begin());
  }
  const std::size_t grid = image.dim(0) / cell;
  return blocks_to_image(moved, grid, cell, image.dim(2));
}

Tensor label_image(const SyntheticPair& pair, std::size_t classes) {
  const std::size_t side = pair.grid * pair.cell;
  Tensor img({side, side, 1});
  const double denom = classes > 1 ? static_cast<double>(classes - 1) : 1.0;
  for (std::size_t i = 0; i < pair.labels.size(); ++i) img[i] = static_cast<double>(pair.labels[i]) / denom;
  return img;
}

}  // namespace mcl
