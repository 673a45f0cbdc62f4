#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcl/adam.hpp"
#include "mcl/contrastive.hpp"
#include "mcl/correspondence.hpp"
#include "mcl/encoder.hpp"
#include "mcl/synthetic.hpp"

namespace mcl {

enum class LossKind { mcl, infonce };
std::string to_string(LossKind k);

struct ExperimentConfig {
  std::string run_id = "run";
  std::uint64_t seed = 1;

  TaskConfig task;
  std::vector<ConvLayerSpec> layers{{2, 2, 16}, {2, 2, 16}, {1, 1, 16}};
  double leaky_slope = 0.2;

  bool scm = false;
  std::size_t scm_dim = 32;

  LossKind loss = LossKind::mcl;
  ContrastiveConfig contrastive;
  double sharpness = 100.0;
  LossWeights weights;
  AdamConfig adam;

  std::size_t steps = 2000;
  std::size_t batch = 4;
  std::size_t log_every = 500;
  std::size_t eval_pairs = 4;
  std::uint64_t eval_seed = 1000003;
  // Stop once a logged evaluation reaches this top-1 accuracy (0 disables).
  double stop_at_top1 = 0.0;

  EncoderConfig condition_encoder() const;
  EncoderConfig image_encoder() const;
  std::size_t feature_dim() const;
  // Throws ConfigError on any inconsistent or out-of-range setting.
  void validate() const;
};

// Flat UTF-8 "key = value" text. '#' starts a comment; blank lines are
// ignored; unknown keys, duplicate keys and malformed values are errors.
// Keys absent from the text keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& cfg);

// "3:2:16,3:2:16,3:1:16" = kernel:stride:channels per layer.
std::vector<ConvLayerSpec> parse_layers(const std::string& s);
std::string format_layers(const std::vector<ConvLayerSpec>& layers);

}  // namespace mcl
