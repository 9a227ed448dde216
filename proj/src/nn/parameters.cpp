#include "laya/nn/parameters.hpp"

#include <cmath>

#include "laya/error.hpp"

namespace laya::nn {

Parameter& ParameterStore::add(std::string name, Tensor value) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name " + name);
  return params_.emplace_back(std::move(name), std::move(value));
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor(rng, std::move(shape), -limit, limit);
}

Tensor uniform_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

Dense Dense::create(ParameterStore& store, const std::string& name, std::size_t in,
                    std::size_t out, Rng& rng) {
  Dense d;
  d.weight = &store.add(name + ".weight", glorot_uniform(rng, in, out, {in, out}));
  d.bias = &store.add(name + ".bias", Tensor({out}));
  return d;
}

Var Dense::operator()(Tape& tape, Var x) const {
  return ops::add_bias(ops::matmul(x, tape.parameter(*weight)), tape.parameter(*bias));
}

Norm Norm::create(ParameterStore& store, const std::string& name, std::size_t dim) {
  Norm n;
  n.gain = &store.add(name + ".gain", Tensor({dim}, 1.0));
  n.offset = &store.add(name + ".offset", Tensor({dim}));
  return n;
}

Var Norm::operator()(Tape& tape, Var x) const {
  return ops::layer_norm(x, tape.parameter(*gain), tape.parameter(*offset));
}

}  // namespace laya::nn
