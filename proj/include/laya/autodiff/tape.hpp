#pragma once

// Dynamic reverse-mode tape. Ops append a node holding their forward value and
// a backward closure; Tape::backward walks the closures in exact reverse
// execution order, accumulating gradients additively into zero-initialised
// buffers.
//
// A Tape is single-threaded. Parameters are owned elsewhere (by a model) and
// are referenced by pointer from the nodes created through Tape::parameter, so
// they must outlive the tape.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "laya/tensor.hpp"

namespace laya::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // empty until the first backward that reaches this parameter

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;

  Tape& tape() const noexcept { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, Var out)>;

  // With record == false the tape only evaluates; no closures are kept and
  // backward is unavailable.
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var input(Tensor value, bool requires_grad = true);
  Var parameter(Parameter& param);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  bool recording() const noexcept { return record_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t op_count() const noexcept { return ops_.size(); }

  // Gradient of a node after backward. Nodes that the loss does not reach
  // report an all-zero gradient.
  Tensor grad(Var v) const;

  // Scalar loss only. Writes parameter gradients into Parameter::grad
  // (additively) and consumes the tape.
  void backward(Var loss);

  // --- op implementation interface -------------------------------------
  // Appends a node computed from `inputs`; `fn` runs during backward only if
  // some input requires a gradient.
  Var emit(Tensor value, std::initializer_list<Var> inputs, Backward fn);
  Var emit(Tensor value, const std::vector<Var>& inputs, Backward fn);

  // Zero-initialised gradient buffer for a node, allocated on first use.
  Tensor& grad_buffer(Var v);
  bool has_grad_buffer(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };
  struct Op {
    std::uint32_t output;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Parameter* param);
  void check_owner(Var v) const;

  bool record_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
  std::vector<Op> ops_;
};

}  // namespace laya::ad
