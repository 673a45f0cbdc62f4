#include "mcl/model.hpp"

#include <cmath>

#include "mcl/errors.hpp"
#include "mcl/ops.hpp"
#include "mcl/rng.hpp"

namespace mcl {
namespace {

constexpr std::uint64_t kConditionEncoderStream = 10;
constexpr std::uint64_t kImageEncoderStream = 11;
constexpr std::uint64_t kScmConditionStream = 12;
constexpr std::uint64_t kScmImageStream = 13;

Tensor projection_weight(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w({n, d});
  const double bound = std::sqrt(6.0 / static_cast<double>(n));
  for (auto& v : w.storage()) v = rng.uniform(-bound, bound);
  return w;
}

void push_encoder(NamedTensors& out, const std::string& prefix, const EncoderParams& p) {
  for (std::size_t i = 0; i < p.kernels.size(); ++i) {
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".kernel", p.kernels[i]);
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".bias", p.biases[i]);
  }
}

void push_encoder_refs(std::vector<NamedParam>& out, const std::string& prefix, EncoderParams& p) {
  for (std::size_t i = 0; i < p.kernels.size(); ++i) {
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".kernel", &p.kernels[i]);
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".bias", &p.biases[i]);
  }
}

}  // namespace

Model Model::init(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.condition = init_params(cfg.condition_encoder(), derive_seed(seed, kConditionEncoderStream));
  m.image = init_params(cfg.image_encoder(), derive_seed(seed, kImageEncoderStream));
  m.scm = cfg.scm;
  if (cfg.scm) {
    const std::size_t n = cfg.task.positions();
    m.scm_condition_weight = projection_weight(n, cfg.scm_dim, derive_seed(seed, kScmConditionStream));
    m.scm_condition_bias = Tensor({cfg.scm_dim});
    m.scm_image_weight = projection_weight(n, cfg.scm_dim, derive_seed(seed, kScmImageStream));
    m.scm_image_bias = Tensor({cfg.scm_dim});
  }
  return m;
}

NamedTensors Model::named_tensors() const {
  NamedTensors out;
  push_encoder(out, "E_X", condition);
  push_encoder(out, "E_Z", image);
  if (scm) {
    out.emplace_back("SCM_X.weight", scm_condition_weight);
    out.emplace_back("SCM_X.bias", scm_condition_bias);
    out.emplace_back("SCM_Z.weight", scm_image_weight);
    out.emplace_back("SCM_Z.bias", scm_image_bias);
  }
  return out;
}

std::vector<NamedParam> Model::parameters() {
  std::vector<NamedParam> out;
  push_encoder_refs(out, "E_X", condition);
  push_encoder_refs(out, "E_Z", image);
  if (scm) {
    out.emplace_back("SCM_X.weight", &scm_condition_weight);
    out.emplace_back("SCM_X.bias", &scm_condition_bias);
    out.emplace_back("SCM_Z.weight", &scm_image_weight);
    out.emplace_back("SCM_Z.bias", &scm_image_bias);
  }
  return out;
}

Model Model::from_tensors(const ExperimentConfig& cfg, const NamedTensors& tensors) {
  Model m = init(cfg, 0);
  auto refs = m.parameters();
  if (refs.size() != tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, config expects " +
                      std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& [name, t] = tensors[i];
    if (name != refs[i].first) throw FormatError("checkpoint tensor " + std::to_string(i) + " is '" + name + "', expected '" + refs[i].first + "'");
    if (t.dims() != refs[i].second->dims()) {
      throw FormatError("checkpoint tensor '" + name + "' has dims " + dims_to_string(t.dims()) + ", expected " +
                        dims_to_string(refs[i].second->dims()));
    }
    *refs[i].second = t;
  }
  return m;
}

BoundModel bind_model(Tape& tape, const Model& model, bool trainable) {
  auto leaf = [&](const std::string& name, const Tensor& t) {
    return trainable ? tape.parameter(name, t) : tape.constant(t);
  };
  auto encoder = [&](const std::string& prefix, const EncoderParams& p) {
    if (trainable) return bind(tape, prefix, p);
    EncoderVars v;
    for (std::size_t i = 0; i < p.kernels.size(); ++i) {
      v.kernels.push_back(tape.constant(p.kernels[i]));
      v.biases.push_back(tape.constant(p.biases[i]));
    }
    return v;
  };
  BoundModel b;
  b.condition = encoder("E_X", model.condition);
  b.image = encoder("E_Z", model.image);
  if (model.scm) {
    b.scm_condition = ScmProjection{leaf("SCM_X.weight", model.scm_condition_weight), leaf("SCM_X.bias", model.scm_condition_bias)};
    b.scm_image = ScmProjection{leaf("SCM_Z.weight", model.scm_image_weight), leaf("SCM_Z.bias", model.scm_image_bias)};
  }
  return b;
}

PairForward forward_pair(Tape& tape, const BoundModel& bound, const ExperimentConfig& cfg, const SyntheticPair& pair) {
  PairForward f;
  const EncoderConfig cond_cfg = cfg.condition_encoder();
  const EncoderConfig img_cfg = cfg.image_encoder();
  f.x_base = encode(cond_cfg, bound.condition, tape.constant(pair.condition)).features;
  f.y_base = encode(img_cfg, bound.image, tape.constant(pair.ground_truth)).features;
  f.z_base = encode(img_cfg, bound.image, tape.constant(pair.exemplar)).features;

  if (bound.scm_condition && bound.scm_image) {
    auto augment = [](Var base, const ScmProjection& proj) {
      return augment_features(base, project_scm(compute_scm(base), proj));
    };
    f.x = augment(f.x_base, *bound.scm_condition);
    f.y = augment(f.y_base, *bound.scm_image);
    f.z = augment(f.z_base, *bound.scm_image);
  } else {
    f.x = f.x_base;
    f.y = f.y_base;
    f.z = f.z_base;
  }

  if (cfg.loss == LossKind::mcl) {
    f.contrastive = marginal_contrastive(f.x, f.y, cfg.contrastive, Direction::bidirectional);
  } else {
    f.contrastive = info_nce(f.x, f.y, cfg.contrastive.temperature, Direction::bidirectional);
  }
  f.consistency = feature_consistency_loss(f.x_base, f.y_base);

  f.t = build_correspondence(f.x, f.z, cfg.sharpness);
  f.exemplar_blocks = tape.constant(image_to_blocks(pair.exemplar, pair.cell));
  f.target_blocks = tape.constant(image_to_blocks(pair.pseudo_target, pair.cell));
  f.cycle = cycle_loss(f.t, f.exemplar_blocks);
  f.pseudo = pseudo_pair_loss(f.t, f.exemplar_blocks, f.target_blocks);
  f.total = correspondence_objective({f.cycle, f.consistency, f.contrastive.loss, f.pseudo}, cfg.weights);
  return f;
}

}  // namespace mcl
