#include "laya/autodiff/tape.hpp"

#include <algorithm>

#include "laya/error.hpp"
#include "laya/simd/kernels.hpp"

namespace laya::ad {

const Tensor& Var::value() const { return tape_->value(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::push(Tensor value, bool requires_grad, Parameter* param) {
  if (consumed_) throw ContractError("tape already consumed by backward");
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad && record_, param});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

Var Tape::parameter(Parameter& param) { return push(param.value, true, &param); }

void Tape::check_owner(Var v) const {
  if (!v.valid() || &v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

const Tensor& Tape::value(Var v) const {
  check_owner(v);
  return nodes_[v.id()].value;
}

bool Tape::requires_grad(Var v) const {
  check_owner(v);
  return nodes_[v.id()].requires_grad;
}

Tensor Tape::grad(Var v) const {
  check_owner(v);
  const Node& node = nodes_[v.id()];
  if (node.grad.empty() && node.value.size() > 0) return Tensor(node.value.shape());
  return node.grad;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id()];
  if (node.grad.shape() != node.value.shape()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

bool Tape::has_grad_buffer(Var v) const {
  const Node& node = nodes_[v.id()];
  return node.grad.shape() == node.value.shape() && !node.value.empty();
}

Var Tape::emit(Tensor value, std::initializer_list<Var> inputs, Backward fn) {
  bool needs_grad = false;
  for (const Var& in : inputs) {
    check_owner(in);
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  Var out = push(std::move(value), needs_grad, nullptr);
  if (record_ && needs_grad) ops_.push_back(Op{out.id(), std::move(fn)});
  return out;
}

Var Tape::emit(Tensor value, const std::vector<Var>& inputs, Backward fn) {
  bool needs_grad = false;
  for (const Var& in : inputs) {
    check_owner(in);
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  Var out = push(std::move(value), needs_grad, nullptr);
  if (record_ && needs_grad) ops_.push_back(Op{out.id(), std::move(fn)});
  return out;
}

void Tape::backward(Var loss) {
  check_owner(loss);
  if (!record_) throw ContractError("backward on a non-recording tape");
  if (consumed_) throw ContractError("tape already consumed by backward");
  const Tensor& loss_value = nodes_[loss.id()].value;
  if (loss_value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(loss_value.shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;

  grad_buffer(loss)[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (!has_grad_buffer(Var(this, it->output))) continue;
    it->backward(*this, Var(this, it->output));
  }
  ops_.clear();

  const auto& k = simd::kernels();
  for (Node& node : nodes_) {
    if (node.param == nullptr || node.grad.empty()) continue;
    Parameter& p = *node.param;
    if (p.grad.shape() != p.value.shape()) p.zero_grad();
    k.axpy(p.grad.size(), 1.0, node.grad.data(), p.grad.data());
  }
}

}  // namespace laya::ad
