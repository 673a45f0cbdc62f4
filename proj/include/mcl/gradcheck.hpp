#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcl/tape.hpp"
#include "mcl/tensor.hpp"

namespace mcl {

// One sampled problem: leaf tensors and a scalar function of them. Leaves
// are recorded as variables for the analytic pass and as constants for the
// finite-difference passes.
struct GradcheckInstance {
  std::vector<Tensor> leaves;
  std::function<Var(Tape&, const std::vector<Var>&)> fn;
};

struct GradcheckSettings {
  std::uint64_t seed = 7;
  std::size_t instances = 100;
  double step = 1e-5;
  double tolerance = 1e-3;
  // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

struct GradcheckResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t checked_entries = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Central differences against the tape gradient for one instance; returns the
// largest relative error over every leaf entry.
double max_relative_error(const GradcheckInstance& inst, double step, double floor, std::size_t* entries = nullptr);

// Runs every registered operation. Sizes stay within N <= 12, C <= 8.
std::vector<GradcheckResult> run_gradcheck(const GradcheckSettings& settings);
std::vector<std::string> gradcheck_case_names();

}  // namespace mcl
