#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcl/tensor.hpp"

namespace mcl {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Dims& dims() const { return value().dims(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Single-writer record of primitive ops for reverse-mode differentiation.
//
// Each recorded op stores its output value and a closure that, given the
// gradient flowing into the output, accumulates vector-Jacobian products
// into the gradient slots of its parents. backward() replays closures in
// exact reverse recording order; accumulation is a plain sequential sum so
// results are bit-reproducible.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Named trainable leaf. Names must be unique on one tape.
  Var parameter(const std::string& name, Tensor value);

  // Used by op implementations. `fn` may be empty when no parent needs grad.
  Var record(Tensor value, const std::vector<Var>& parents, Backward fn);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node that
  // requires them. Accumulators are NOT cleared; call zero_grad() between
  // passes when idempotent results are wanted.
  void backward(Var loss);
  void zero_grad();

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Accumulated gradient of a node; zeros if nothing flowed into it.
  Tensor grad(Var v) const;
  // Mutable accumulator for op closures; nullptr when the node does not require grad.
  Tensor* grad_slot(std::size_t id);

  std::optional<Var> find_parameter(const std::string& name);
  const std::map<std::string, std::size_t>& parameters() const { return params_; }
  std::map<std::string, Tensor> parameter_grads() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    Backward backward;
    std::optional<Tensor> grad;
  };

  void check_owner(Var v) const;

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
};

}  // namespace mcl
