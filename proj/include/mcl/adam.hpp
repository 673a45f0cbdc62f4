#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

using NamedParam = std::pair<std::string, Tensor*>;

// One bias-corrected Adam update over `params`, in the given order. Every
// parameter must have a gradient of identical shape. A non-finite gradient
// aborts the step with DivergenceError before anything is modified.
void adam_step(AdamState& state, const std::vector<NamedParam>& params,
               const std::map<std::string, Tensor>& grads);

}  // namespace mcl
