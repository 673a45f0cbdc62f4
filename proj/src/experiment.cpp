#include "mcl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mcl/errors.hpp"
#include "mcl/metrics.hpp"
#include "mcl/ops.hpp"
#include "mcl/rng.hpp"

namespace mcl {
namespace {

constexpr std::uint64_t kModelStream = 100;
constexpr std::uint64_t kDataStream = 101;

MetricsRow row_header(const ExperimentConfig& cfg) {
  MetricsRow r;
  r.run_id = cfg.run_id;
  r.seed = cfg.seed;
  r.margin = cfg.loss == LossKind::mcl ? cfg.contrastive.margin : 0.0;
  r.scm = cfg.scm;
  return r;
}

}  // namespace

std::vector<SyntheticPair> evaluation_pairs(const ExperimentConfig& cfg) {
  std::vector<SyntheticPair> pairs;
  for (std::size_t i = 0; i < cfg.eval_pairs; ++i) pairs.push_back(generate_pair(derive_seed(cfg.eval_seed, i), cfg.task));
  return pairs;
}

PairEvaluation evaluate_pair(const ExperimentConfig& cfg, const Model& model, const SyntheticPair& pair) {
  Tape tape;
  const BoundModel bound = bind_model(tape, model, false);
  const PairForward f = forward_pair(tape, bound, cfg, pair);
  const WarpResult w = warp(f.t, f.exemplar_blocks);
  PairEvaluation e;
  e.predicted = w.source_argmax;
  e.warped = blocks_to_image(w.warped.value(), pair.grid, pair.cell, 3);
  e.l1 = mean_l1(e.warped, pair.ground_truth);
  e.psnr = psnr(e.warped, pair.ground_truth);
  e.ssim = ssim(e.warped, pair.ground_truth);
  e.top1 = top1_accuracy(e.predicted, pair.true_permutation);
  return e;
}

MetricsRow evaluate(const ExperimentConfig& cfg, const Model& model, const std::vector<SyntheticPair>& pairs) {
  if (pairs.empty()) throw UsageError("evaluate: no pairs");
  MetricsRow r = row_header(cfg);
  for (const auto& pair : pairs) {
    Tape tape;
    const BoundModel bound = bind_model(tape, model, false);
    const PairForward f = forward_pair(tape, bound, cfg, pair);
    const WarpResult w = warp(f.t, f.exemplar_blocks);
    const Tensor warped = blocks_to_image(w.warped.value(), pair.grid, pair.cell, 3);
    r.l1 += mean_l1(warped, pair.ground_truth);
    r.psnr += psnr(warped, pair.ground_truth);
    r.ssim += ssim(warped, pair.ground_truth);
    r.top1_accuracy += top1_accuracy(w.source_argmax, pair.true_permutation);
    r.loss_total += f.total.value().item();
    r.loss_contrastive += f.contrastive.value;
    r.loss_consistency += f.consistency.value().item();
    r.loss_cycle += f.cycle.value().item();
    r.loss_pseudo += f.pseudo.value().item();
  }
  const double n = static_cast<double>(pairs.size());
  for (double* v : {&r.l1, &r.psnr, &r.ssim, &r.top1_accuracy, &r.loss_total, &r.loss_contrastive,
                    &r.loss_consistency, &r.loss_cycle, &r.loss_pseudo}) {
    *v /= n;
  }
  return r;
}

TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress,
                  const std::optional<std::filesystem::path>& dump_dir) {
  cfg.validate();
  TrainResult result;
  result.model = Model::init(cfg, derive_seed(cfg.seed, kModelStream));
  AdamState adam;
  adam.config = cfg.adam;
  const auto eval_set = evaluation_pairs(cfg);
  const std::uint64_t data_seed = derive_seed(cfg.seed, kDataStream);

  auto log = [&](std::size_t step) {
    MetricsRow row = evaluate(cfg, result.model, eval_set);
    row.epoch = step;
    result.rows.push_back(row);
    if (progress) progress(row);
    return row;
  };

  MetricsRow last = log(0);
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cfg.stop_at_top1 > 0.0 && last.top1_accuracy >= cfg.stop_at_top1) break;
    Tape tape;
    const BoundModel bound = bind_model(tape, result.model, true);
    Var total;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const SyntheticPair pair = generate_pair(derive_seed(data_seed, step * cfg.batch + b), cfg.task);
      const PairForward f = forward_pair(tape, bound, cfg, pair);
      Var contribution = scale(f.total, inv_batch);
      total = b == 0 ? contribution : add(total, contribution);
    }
    const double loss = total.value().item();
    if (!std::isfinite(loss)) {
      if (dump_dir) save_checkpoint(*dump_dir / "last_good.mcln", result.model.named_tensors());
      throw DivergenceError("non-finite training loss at step " + std::to_string(step));
    }
    tape.backward(total);
    try {
      adam_step(adam, result.model.parameters(), tape.parameter_grads());
    } catch (const DivergenceError&) {
      if (dump_dir) save_checkpoint(*dump_dir / "last_good.mcln", result.model.named_tensors());
      throw;
    }
    result.steps_run = step + 1;
    if (result.steps_run % cfg.log_every == 0 || result.steps_run == cfg.steps) last = log(result.steps_run);
  }
  return result;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

SweepReport sweep_margin(const ExperimentConfig& cfg, const std::vector<double>& margins,
                         const std::vector<std::uint64_t>& seeds, const ProgressFn& progress) {
  if (margins.empty() || seeds.empty()) throw ConfigError("sweep needs at least one margin and one seed");
  SweepReport report;
  for (double m : margins) {
    std::vector<double> top1, l1, ps, ss;
    for (auto seed : seeds) {
      ExperimentConfig c = cfg;
      c.loss = LossKind::mcl;
      c.contrastive.margin = m;
      c.seed = seed;
      char id[64];
      std::snprintf(id, sizeof id, "%s_m%.3g_s%llu", cfg.run_id.c_str(), m, static_cast<unsigned long long>(seed));
      c.run_id = id;
      const TrainResult r = train(c, progress);
      const MetricsRow& last = r.rows.back();
      report.final_rows.push_back(last);
      top1.push_back(last.top1_accuracy);
      l1.push_back(last.l1);
      ps.push_back(last.psnr);
      ss.push_back(last.ssim);
    }
    SweepCell cell;
    cell.margin = m;
    cell.runs = seeds.size();
    mean_std(top1, cell.top1_mean, cell.top1_std);
    mean_std(l1, cell.l1_mean, cell.l1_std);
    mean_std(ps, cell.psnr_mean, cell.psnr_std);
    mean_std(ss, cell.ssim_mean, cell.ssim_std);
    report.cells.push_back(cell);
  }
  return report;
}

std::string format_sweep_table(const SweepReport& report) {
  std::ostringstream o;
  o << "margin  runs  top1 (mean +- std)     L1 (mean +- std)       PSNR dB (mean +- std)  SSIM (mean +- std)\n";
  for (const auto& c : report.cells) {
    char line[256];
    std::snprintf(line, sizeof line, "%6.3f  %4zu  %.4f +- %.4f       %.4f +- %.4f       %7.3f +- %.3f        %.4f +- %.4f\n",
                  c.margin, c.runs, c.top1_mean, c.top1_std, c.l1_mean, c.l1_std, c.psnr_mean, c.psnr_std,
                  c.ssim_mean, c.ssim_std);
    o << line;
  }
  return o.str();
}

}  // namespace mcl
