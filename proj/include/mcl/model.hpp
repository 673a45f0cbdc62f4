#pragma once

#include <optional>
#include <vector>

#include "mcl/adam.hpp"
#include "mcl/checkpoint.hpp"
#include "mcl/config.hpp"
#include "mcl/contrastive.hpp"
#include "mcl/correspondence.hpp"
#include "mcl/encoder.hpp"
#include "mcl/scm.hpp"
#include "mcl/synthetic.hpp"

namespace mcl {

// Trainable state of the correspondence network: condition encoder E_X,
// image encoder E_Z (shared by exemplar and ground truth) and, when enabled,
// one SCM projection per branch.
struct Model {
  EncoderParams condition;
  EncoderParams image;
  bool scm = false;
  Tensor scm_condition_weight, scm_condition_bias;
  Tensor scm_image_weight, scm_image_bias;

  static Model init(const ExperimentConfig& cfg, std::uint64_t seed);
  // Throws FormatError when names or shapes disagree with `cfg`.
  static Model from_tensors(const ExperimentConfig& cfg, const NamedTensors& tensors);

  // Fixed order: E_X layers, E_Z layers, then SCM projections.
  NamedTensors named_tensors() const;
  std::vector<NamedParam> parameters();
};

struct BoundModel {
  EncoderVars condition;
  EncoderVars image;
  std::optional<ScmProjection> scm_condition;
  std::optional<ScmProjection> scm_image;
};

// trainable = false records the parameters as constants (forward-only passes).
BoundModel bind_model(Tape& tape, const Model& model, bool trainable);

struct PairForward {
  Var x_base, y_base, z_base;  // encoder outputs, unit rows
  Var x, y, z;                 // features used for matching (SCM-augmented when enabled)
  CorrespondenceMatrix t;      // condition -> exemplar
  Var exemplar_blocks;         // [N, cell*cell*3]
  Var target_blocks;           // pseudo target Y' as blocks
  LossReport contrastive;
  Var consistency, cycle, pseudo, total;
};

PairForward forward_pair(Tape& tape, const BoundModel& bound, const ExperimentConfig& cfg, const SyntheticPair& pair);

}  // namespace mcl
