#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

enum class TaskKind { mosaic, gradient_shapes };
std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& s);

struct TaskConfig {
  TaskKind kind = TaskKind::mosaic;
  std::size_t grid = 16;    // feature cells per image side
  std::size_t cell = 4;     // pixels per cell side; must equal the encoder stride product
  std::size_t classes = 8;  // label count of the condition map
  bool permute = true;      // false: identity correspondence
  bool jitter = true;       // photometric jitter on exemplar and pseudo target
  // Classes share one texture set whose assignment is reshuffled per image,
  // so appearance alone does not name a class; classes differ only in how
  // much of the layout they cover.
  bool ambiguous = false;

  std::size_t image_size() const { return grid * cell; }
  std::size_t positions() const { return grid * grid; }
  void validate() const;
};

struct SyntheticPair {
  std::vector<std::size_t> labels;  // per pixel, row-major, H*W
  Tensor condition;                 // [H, W, classes] one-hot labels
  Tensor ground_truth;              // [H, W, 3]
  Tensor pseudo_target;             // [H, W, 3] jittered ground truth (Y')
  Tensor exemplar;                  // [H, W, 3] pseudo_target with cells permuted
  // true_permutation[i] = exemplar cell holding the content of ground-truth cell i.
  std::vector<std::size_t> true_permutation;
  std::size_t grid = 0;
  std::size_t cell = 0;
};

// Deterministic in (seed, task).
SyntheticPair generate_pair(std::uint64_t seed, const TaskConfig& task);

// [grid*cell, grid*cell, C] <-> [grid*grid, cell*cell*C]; block rows in grid order.
Tensor image_to_blocks(const Tensor& image, std::size_t cell);
Tensor blocks_to_image(const Tensor& blocks, std::size_t grid, std::size_t cell, std::size_t channels);

// Moves block i of `image` to block position permutation[i].
Tensor permute_blocks(const Tensor& image, std::size_t cell, const std::vector<std::size_t>& permutation);

// Label map rendered as a grey image (label / (classes - 1)).
Tensor label_image(const SyntheticPair& pair, std::size_t classes);

}  // namespace mcl
