#include "mcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "mcl/contrastive.hpp"
#include "mcl/correspondence.hpp"
#include "mcl/encoder.hpp"
#include "mcl/errors.hpp"
#include "mcl/ops.hpp"
#include "mcl/rng.hpp"
#include "mcl/scm.hpp"

namespace mcl {
namespace {

using Leaves = std::vector<Var>;
using Generator = std::function<std::optional<GradcheckInstance>(Rng&)>;

// Entries closer than this to a kink (|x| in L1, leaky ReLU at 0) are resampled.
constexpr double kKinkGuard = 1e-3;

Tensor normal_tensor(Rng& rng, Dims dims, double sd = 1.0) {
  Tensor t(std::move(dims));
  for (auto& v : t.data()) v = sd * rng.normal();
  return t;
}

Tensor uniform_tensor(Rng& rng, Dims dims, double lo, double hi) {
  Tensor t(std::move(dims));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// <out, w> for a fixed random w, reducing any output to a scalar.
Var project(Var out, const Tensor& w) {
  Tape& tape = *out.tape();
  const std::size_t n = out.value().size();
  Var flat = reshape(out, {1, n});
  Var weights = tape.constant(w.reshaped({1, n}));
  return sum(matmul_nt(flat, weights));
}

bool away_from_zero(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::abs(v) > kKinkGuard; });
}

Tensor difference(const Tensor& a, const Tensor& b) {
  Tensor d = a;
  for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] -= b[i];
  return d;
}

// Forward value of fn with every leaf constant.
Tensor forward_value(const std::vector<Tensor>& leaves, const std::function<Var(Tape&, const Leaves&)>& fn) {
  Tape tape;
  Leaves vars;
  for (const auto& t : leaves) vars.push_back(tape.constant(t));
  return fn(tape, vars).value();
}

struct Case {
  std::string name;
  Generator generate;
};

GradcheckInstance with_projection(std::vector<Tensor> leaves, std::function<Var(Tape&, const Leaves&)> out, Rng& rng) {
  const Tensor value = forward_value(leaves, out);
  Tensor w = normal_tensor(rng, value.dims().empty() ? Dims{1} : value.dims());
  GradcheckInstance inst;
  inst.leaves = std::move(leaves);
  inst.fn = [out, w](Tape& tape, const Leaves& v) { return project(out(tape, v), w); };
  return inst;
}

std::vector<Case> make_cases() {
  std::vector<Case> cases;

  cases.push_back({"matmul", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), k = pick(rng, 1, 8), m = pick(rng, 1, 12);
                     return with_projection({normal_tensor(rng, {n, k}), normal_tensor(rng, {k, m})},
                                            [](Tape&, const Leaves& v) { return matmul(v[0], v[1]); }, rng);
                   }});
  cases.push_back({"matmul_nt", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), k = pick(rng, 1, 8), m = pick(rng, 1, 12);
                     return with_projection({normal_tensor(rng, {n, k}), normal_tensor(rng, {m, k})},
                                            [](Tape&, const Leaves& v) { return matmul_nt(v[0], v[1]); }, rng);
                   }});
  cases.push_back({"matmul_tn", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), k = pick(rng, 1, 8), m = pick(rng, 1, 12);
                     return with_projection({normal_tensor(rng, {k, n}), normal_tensor(rng, {k, m})},
                                            [](Tape&, const Leaves& v) { return matmul_tn(v[0], v[1]); }, rng);
                   }});
  cases.push_back({"add_row_bias+concat", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c1 = pick(rng, 1, 8), c2 = pick(rng, 1, 8);
                     return with_projection(
                         {normal_tensor(rng, {n, c1}), normal_tensor(rng, {c1}), normal_tensor(rng, {n, c2})},
                         [](Tape&, const Leaves& v) { return concat_cols(add_row_bias(v[0], v[1]), v[2]); }, rng);
                   }});
  cases.push_back({"l2_normalize_rows", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     return with_projection({normal_tensor(rng, {n, c})},
                                            [](Tape&, const Leaves& v) { return l2_normalize_rows(v[0]); }, rng);
                   }});
  cases.push_back({"cosine_similarity_matrix", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), m = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     return with_projection({normal_tensor(rng, {n, c}), normal_tensor(rng, {m, c})},
                                            [](Tape&, const Leaves& v) {
                                              return cosine_similarity_matrix(l2_normalize_rows(v[0]),
                                                                              l2_normalize_rows(v[1]));
                                            },
                                            rng);
                   }});
  cases.push_back({"softmax_rows", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), m = pick(rng, 1, 12);
                     const double beta = rng.uniform(0.5, 5.0);
                     return with_projection({normal_tensor(rng, {n, m})},
                                            [beta](Tape&, const Leaves& v) { return softmax_rows(v[0], beta); }, rng);
                   }});
  cases.push_back({"stable_arccos", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12);
                     return with_projection({uniform_tensor(rng, {n}, -0.99, 0.99)},
                                            [](Tape&, const Leaves& v) { return stable_arccos(v[0]); }, rng);
                   }});
  cases.push_back({"margin_cosine", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12);
                     const double m = rng.uniform(0.0, 0.5);
                     return with_projection({uniform_tensor(rng, {n}, 0.01, std::numbers::pi - 0.5)},
                                            [m](Tape&, const Leaves& v) { return margin_cosine(v[0], m); }, rng);
                   }});
  cases.push_back({"angular_margin", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12);
                     const double m = rng.uniform(0.0, 0.5);
                     return with_projection({uniform_tensor(rng, {n}, -0.85, 0.99)},
                                            [m](Tape&, const Leaves& v) { return angular_margin(v[0], m); }, rng);
                   }});
  cases.push_back({"info_nce", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     const double tau = rng.uniform(0.1, 1.0);
                     const auto dir = static_cast<Direction>(rng.below(3));
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c})};
                     inst.fn = [tau, dir](Tape&, const Leaves& v) {
                       return info_nce(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]), tau, dir).loss;
                     };
                     return inst;
                   }});
  cases.push_back({"marginal_contrastive", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     ContrastiveConfig cfg;
                     cfg.margin = rng.uniform(0.0, 0.5);
                     cfg.scale = rng.uniform(1.0, 10.0);
                     const auto dir = static_cast<Direction>(rng.below(3));
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c})};
                     // Keep every positive away from the arccos clamp and the pi cap.
                     const Tensor cosines = forward_value(inst.leaves, [](Tape&, const Leaves& v) {
                       return diagonal(cosine_similarity_matrix(l2_normalize_rows(v[0]), l2_normalize_rows(v[1])));
                     });
                     for (double cv : cosines.data()) {
                       if (std::abs(cv) > 0.999 || std::acos(cv) + cfg.margin > std::numbers::pi - 0.01) return std::nullopt;
                     }
                     inst.fn = [cfg, dir](Tape&, const Leaves& v) {
                       return marginal_contrastive(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]), cfg, dir).loss;
                     };
                     return inst;
                   }});
  cases.push_back({"scm+projection", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8), d = pick(rng, 1, 8);
                     return with_projection(
                         {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, d}), normal_tensor(rng, {d})},
                         [](Tape&, const Leaves& v) {
                           Var x = l2_normalize_rows(v[0]);
                           return augment_features(x, project_scm(compute_scm(x), ScmProjection{v[1], v[2]}));
                         },
                         rng);
                   }});
  cases.push_back({"warp", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8), p = pick(rng, 1, 8);
                     const double beta = rng.uniform(1.0, 20.0);
                     return with_projection(
                         {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c}), normal_tensor(rng, {n, p})},
                         [beta](Tape&, const Leaves& v) {
                           auto t = build_correspondence(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]), beta);
                           return warp(t, v[2]).warped;
                         },
                         rng);
                   }});

  // The three L1 terms are resampled when any residual sits near the |.| kink.
  cases.push_back({"cycle_loss", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8), p = pick(rng, 1, 8);
                     const double beta = rng.uniform(1.0, 20.0);
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c}), normal_tensor(rng, {n, p})};
                     auto t_of = [beta](const Leaves& v) {
                       return build_correspondence(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]), beta);
                     };
                     const Tensor cyc = forward_value(inst.leaves, [&](Tape&, const Leaves& v) {
                       auto t = t_of(v);
                       return matmul_tn(t.t, matmul(t.t, v[2]));
                     });
                     if (!away_from_zero(difference(cyc, inst.leaves[2]))) return std::nullopt;
                     inst.fn = [t_of](Tape&, const Leaves& v) { return cycle_loss(t_of(v), v[2]); };
                     return inst;
                   }});
  cases.push_back({"pseudo_pair_loss", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8), p = pick(rng, 1, 8);
                     const double beta = rng.uniform(1.0, 20.0);
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c}), normal_tensor(rng, {n, p}),
                                    normal_tensor(rng, {n, p})};
                     auto t_of = [beta](const Leaves& v) {
                       return build_correspondence(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]), beta);
                     };
                     const Tensor tz = forward_value(inst.leaves, [&](Tape&, const Leaves& v) { return matmul(t_of(v).t, v[2]); });
                     if (!away_from_zero(difference(tz, inst.leaves[3]))) return std::nullopt;
                     inst.fn = [t_of](Tape&, const Leaves& v) { return pseudo_pair_loss(t_of(v), v[2], v[3]); };
                     return inst;
                   }});
  cases.push_back({"feature_consistency_loss", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {n, c}), normal_tensor(rng, {n, c})};
                     const Tensor d = forward_value(inst.leaves, [](Tape&, const Leaves& v) {
                       return sub(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]));
                     });
                     if (!away_from_zero(d)) return std::nullopt;
                     inst.fn = [](Tape&, const Leaves& v) {
                       return feature_consistency_loss(l2_normalize_rows(v[0]), l2_normalize_rows(v[1]));
                     };
                     return inst;
                   }});
  cases.push_back({"leaky_relu", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t n = pick(rng, 1, 12), c = pick(rng, 1, 8);
                     const double slope = rng.uniform(0.0, 0.5);
                     Tensor x = normal_tensor(rng, {n, c});
                     if (!away_from_zero(x)) return std::nullopt;
                     return with_projection({x}, [slope](Tape&, const Leaves& v) { return leaky_relu(v[0], slope); }, rng);
                   }});
  cases.push_back({"conv2d", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     const std::size_t h = pick(rng, 3, 8), w = pick(rng, 3, 8), cin = pick(rng, 1, 4),
                                       cout = pick(rng, 1, 4), k = pick(rng, 1, 3), stride = pick(rng, 1, 2);
                     return with_projection(
                         {normal_tensor(rng, {h, w, cin}), normal_tensor(rng, {k, k, cin, cout}), normal_tensor(rng, {cout})},
                         [stride](Tape&, const Leaves& v) { return conv2d(v[0], v[1], v[2], stride); }, rng);
                   }});
  cases.push_back({"conv_encoder", [](Rng& rng) -> std::optional<GradcheckInstance> {
                     EncoderConfig cfg;
                     cfg.in_channels = pick(rng, 1, 4);
                     cfg.layers = {{pick(rng, 1, 3), pick(rng, 1, 2), pick(rng, 1, 4)},
                                   {pick(rng, 1, 3), pick(rng, 1, 2), pick(rng, 1, 4)}};
                     cfg.leaky_slope = 0.2;
                     const EncoderParams params = init_params(cfg, rng.next());
                     GradcheckInstance inst;
                     inst.leaves = {normal_tensor(rng, {8, 8, cfg.in_channels}), params.kernels[0], params.biases[0],
                                    params.kernels[1], params.biases[1]};
                     for (std::size_t i = 1; i < inst.leaves.size(); i += 2) {
                       for (auto& b : inst.leaves[i + 1].data()) b = 0.1 * rng.normal();
                     }
                     const Tensor pre = forward_value(inst.leaves, [&](Tape&, const Leaves& v) {
                       return conv2d(v[0], v[1], v[2], cfg.layers[0].stride);
                     });
                     if (!away_from_zero(pre)) return std::nullopt;
                     auto out = [cfg](Tape&, const Leaves& v) {
                       EncoderVars vars{{v[1], v[3]}, {v[2], v[4]}};
                       return encode(cfg, vars, v[0]).features;
                     };
                     return with_projection(std::move(inst.leaves), out, rng);
                   }});
  return cases;
}

}  // namespace

double max_relative_error(const GradcheckInstance& inst, double step, double floor, std::size_t* entries) {
  Tape tape;
  Leaves vars;
  for (const auto& t : inst.leaves) vars.push_back(tape.variable(t));
  Var loss = inst.fn(tape, vars);
  tape.backward(loss);

  double worst = 0.0;
  std::size_t count = 0;
  std::vector<Tensor> probe = inst.leaves;
  for (std::size_t l = 0; l < probe.size(); ++l) {
    const Tensor analytic = tape.grad(vars[l]);
    for (std::size_t i = 0; i < probe[l].size(); ++i) {
      const double orig = probe[l][i];
      probe[l].data()[i] = orig + step;
      const double up = forward_value(probe, inst.fn).item();
      probe[l].data()[i] = orig - step;
      const double down = forward_value(probe, inst.fn).item();
      probe[l].data()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
      ++count;
    }
  }
  if (entries) *entries += count;
  return worst;
}

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const auto& c : make_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradcheckResult> run_gradcheck(const GradcheckSettings& settings) {
  std::vector<GradcheckResult> results;
  std::uint64_t stream = 0;
  for (const auto& c : make_cases()) {
    Rng rng(derive_seed(settings.seed, stream++));
    GradcheckResult r;
    r.name = c.name;
    std::size_t attempts = 0;
    while (r.instances < settings.instances) {
      if (++attempts > settings.instances * 100) throw UsageError("gradcheck: cannot sample instances for " + c.name);
      const auto inst = c.generate(rng);
      if (!inst) continue;
      r.max_relative_error =
          std::max(r.max_relative_error, max_relative_error(*inst, settings.step, settings.floor, &r.checked_entries));
      ++r.instances;
    }
    r.passed = r.max_relative_error < settings.tolerance;
    results.push_back(r);
  }
  return results;
}

}  // namespace mcl
