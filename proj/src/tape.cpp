#include "mcl/tape.hpp"

#include "mcl/errors.hpp"

namespace mcl {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("value() on an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), false, {}, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), true, {}, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const std::string& name, Tensor value) {
  if (params_.count(name)) throw UsageError("parameter '" + name + "' registered twice");
  Var v = variable(std::move(value));
  params_[name] = v.id();
  return v;
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this) throw UsageError("Var belongs to a different tape");
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, Backward fn) {
  bool needs = false;
  for (const auto& p : parents) {
    check_owner(p);
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), needs, needs ? std::move(fn) : Backward{}, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (!n.grad) n.grad = Tensor(n.value.dims());
  return &*n.grad;
}

void Tape::backward(Var loss) {
  check_owner(loss);
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got dims " + dims_to_string(lv.dims()));
  }
  // Interior gradients are per pass; only leaves accumulate across calls.
  for (auto& n : nodes_) {
    if (n.backward) n.grad.reset();
  }
  if (Tensor* g = grad_slot(loss.id())) (*g)[0] += 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || !n.grad) continue;
    // Closures only touch accumulators of parents, which have smaller ids.
    n.backward(*this, *n.grad);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.reset();
}

Tensor Tape::grad(Var v) const {
  check_owner(v);
  const Node& n = nodes_[v.id()];
  return n.grad ? *n.grad : Tensor(n.value.dims());
}

std::optional<Var> Tape::find_parameter(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) return std::nullopt;
  return Var(this, it->second);
}

std::map<std::string, Tensor> Tape::parameter_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : params_) {
    const Node& n = nodes_[id];
    out.emplace(name, n.grad ? *n.grad : Tensor(n.value.dims()));
  }
  return out;
}

}  // namespace mcl
