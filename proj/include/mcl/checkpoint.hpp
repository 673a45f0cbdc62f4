#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian layout:
//   "MCLN" | version u32 | count u32 |
//   count x { name_len u32 | name bytes (UTF-8) | rank u32 | dims u32[rank] | values f64[prod(dims)] }
// Scalars have rank 0 and one value.
std::string serialize_checkpoint(const NamedTensors& tensors);
NamedTensors parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace mcl
