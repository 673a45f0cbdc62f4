#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcl/config.hpp"
#include "mcl/metrics_csv.hpp"
#include "mcl/model.hpp"

namespace mcl {

// Held-out pairs drawn from cfg.eval_seed; identical for every run seed.
std::vector<SyntheticPair> evaluation_pairs(const ExperimentConfig& cfg);

struct PairEvaluation {
  std::vector<std::size_t> predicted;  // argmax of T per condition position
  Tensor warped;                       // T * exemplar blocks as an image
  double l1 = 0.0, psnr = 0.0, ssim = 0.0, top1 = 0.0;
};

PairEvaluation evaluate_pair(const ExperimentConfig& cfg, const Model& model, const SyntheticPair& pair);

// Mean metrics and losses over `pairs`. Run id, seed, margin and scm flag are
// copied from cfg; epoch is left at 0.
MetricsRow evaluate(const ExperimentConfig& cfg, const Model& model, const std::vector<SyntheticPair>& pairs);

struct TrainResult {
  Model model;
  std::vector<MetricsRow> rows;
  std::size_t steps_run = 0;
};

using ProgressFn = std::function<void(const MetricsRow&)>;

// Evaluates at step 0, every cfg.log_every steps and after the last step.
// On a non-finite loss the last good parameters are written to
// `<dump_dir>/last_good.mcln` (when dump_dir is set) and DivergenceError is thrown.
TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress = {},
                  const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

struct SweepCell {
  double margin = 0.0;
  std::size_t runs = 0;
  double top1_mean = 0.0, top1_std = 0.0;
  double l1_mean = 0.0, l1_std = 0.0;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::vector<MetricsRow> final_rows;  // one per (margin, seed), margin-major
};

// Trains and evaluates every (margin, seed) cell with loss = mcl; std is the
// sample standard deviation over seeds (0 for a single seed).
SweepReport sweep_margin(const ExperimentConfig& cfg, const std::vector<double>& margins,
                         const std::vector<std::uint64_t>& seeds, const ProgressFn& progress = {});

std::string format_sweep_table(const SweepReport& report);

}  // namespace mcl
