#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcl/checkpoint.hpp"
#include "mcl/config.hpp"
#include "mcl/errors.hpp"
#include "mcl/experiment.hpp"
#include "mcl/gradcheck.hpp"
#include "mcl/image.hpp"
#include "mcl/metrics_csv.hpp"
#include "mcl/model.hpp"
#include "mcl/ops.hpp"
#include "mcl/scm.hpp"

namespace fs = std::filesystem;
using namespace mcl;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> margin;
  std::optional<std::string> scm;
  std::optional<std::string> loss;
  std::optional<std::size_t> steps;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--margin", o.margin, "angular margin m in radians");
  cmd->add_option("--scm", o.scm, "self-correlation map")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--loss", o.loss, "contrastive loss")->check(CLI::IsMember({"mcl", "infonce"}));
  cmd->add_option("--steps", o.steps, "optimizer steps");
  cmd->add_option("--out", o.out, "output directory");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.margin) cfg.contrastive.margin = *o.margin;
  if (o.scm) cfg.scm = *o.scm == "on";
  if (o.loss) cfg.loss = *o.loss == "mcl" ? LossKind::mcl : LossKind::infonce;
  if (o.steps) cfg.steps = *o.steps;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
}

void write_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_metrics_csv(out, rows);
}

void print_row(const MetricsRow& r) {
  std::printf("%s step %llu  top1 %.4f  L1 %.4f  PSNR %.2f  SSIM %.4f  loss %.3f\n", r.run_id.c_str(),
              static_cast<unsigned long long>(r.epoch), r.top1_accuracy, r.l1, r.psnr, r.ssim, r.loss_total);
  std::fflush(stdout);
}

Model load_model(const ExperimentConfig& cfg, const std::string& path) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  return Model::from_tensors(cfg, load_checkpoint(path));
}

int run_train(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "config.txt", format_config(cfg));
  const TrainResult r = train(cfg, print_row, fs::path(o.out));
  write_csv(fs::path(o.out) / "metrics.csv", r.rows);
  save_checkpoint(fs::path(o.out) / "model.mcln", r.model.named_tensors());
  return 0;
}

int run_eval(const Overrides& o, const std::string& checkpoint) {
  const ExperimentConfig cfg = resolve(o);
  const Model model = load_model(cfg, checkpoint);
  MetricsRow row = evaluate(cfg, model, evaluation_pairs(cfg));
  print_row(row);
  fs::create_directories(o.out);
  write_csv(fs::path(o.out) / "eval.csv", {row});
  return 0;
}

int run_warp(const Overrides& o, const std::string& checkpoint, std::uint64_t pair_seed) {
  const ExperimentConfig cfg = resolve(o);
  const Model model = load_model(cfg, checkpoint);
  const SyntheticPair pair = generate_pair(pair_seed, cfg.task);
  const PairEvaluation ev = evaluate_pair(cfg, model, pair);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_pnm(dir / "condition.pgm", label_image(pair, cfg.task.classes));
  write_pnm(dir / "exemplar.ppm", pair.exemplar);
  write_pnm(dir / "ground_truth.ppm", pair.ground_truth);
  write_pnm(dir / "warped.ppm", ev.warped);

  Tape tape;
  const BoundModel bound = bind_model(tape, model, false);
  const PairForward f = forward_pair(tape, bound, cfg, pair);
  write_pnm(dir / "correspondence.pgm", heatmap(f.t.t.value()));
  write_pnm(dir / "scm_condition.pgm", heatmap(compute_scm(f.x_base).value()));
  write_pnm(dir / "scm_exemplar.pgm", heatmap(compute_scm(f.z_base).value()));
  std::printf("pair %llu  top1 %.4f  L1 %.4f  PSNR %.2f  SSIM %.4f\n", static_cast<unsigned long long>(pair_seed),
              ev.top1, ev.l1, ev.psnr, ev.ssim);
  return 0;
}

int run_gradcheck_cmd(std::size_t instances) {
  GradcheckSettings s;
  s.instances = instances;
  bool ok = true;
  for (const auto& r : run_gradcheck(s)) {
    std::printf("%-28s %4zu inst %7zu entries  max rel err %.3e  %s\n", r.name.c_str(), r.instances,
                r.checked_entries, r.max_relative_error, r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

std::vector<double> parse_margins(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw ConfigError("bad margin '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("no margins given");
  return out;
}

int run_sweep(const Overrides& o, const std::string& margins, std::size_t seeds) {
  ExperimentConfig cfg = resolve(o);
  std::vector<std::uint64_t> seed_list;
  for (std::size_t i = 0; i < seeds; ++i) seed_list.push_back(cfg.seed + i);
  const SweepReport rep = sweep_margin(cfg, parse_margins(margins), seed_list, [](const MetricsRow& r) {
    if (r.epoch > 0) print_row(r);
  });
  const std::string table = format_sweep_table(rep);
  std::printf("%s", table.c_str());
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "sweep.txt", table);
  write_csv(fs::path(o.out) / "sweep.csv", rep.final_rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal contrastive correspondence on synthetic tasks"};
  app.require_subcommand(1);

  Overrides o;
  std::string checkpoint;
  std::uint64_t pair_seed = 0;
  std::size_t instances = 100, seeds = 5;
  std::string margins = "0,0.1,0.2,0.3,0.4";

  auto* train_cmd = app.add_subcommand("train", "train and write metrics.csv, model.mcln");
  add_common(train_cmd, o);
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the held-out pairs");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", checkpoint, "model.mcln")->required();
  auto* warp_cmd = app.add_subcommand("warp", "dump a warped exemplar and heatmaps");
  add_common(warp_cmd, o);
  warp_cmd->add_option("--checkpoint", checkpoint, "model.mcln")->required();
  warp_cmd->add_option("--pair-seed", pair_seed, "seed of the synthetic pair");
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every operation");
  grad_cmd->add_option("--instances", instances, "random instances per operation");
  auto* sweep_cmd = app.add_subcommand("sweep-margin", "train every (margin, seed) and tabulate");
  add_common(sweep_cmd, o);
  sweep_cmd->add_option("--margins", margins, "comma separated margins");
  sweep_cmd->add_option("--seeds", seeds, "seeds per margin, counting up from --seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_eval(o, checkpoint);
    if (*warp_cmd) return run_warp(o, checkpoint, pair_seed);
    if (*grad_cmd) return run_gradcheck_cmd(instances);
    if (*sweep_cmd) return run_sweep(o, margins, seeds);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
