#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "laya/autodiff/ops.hpp"
#include "laya/random.hpp"

namespace laya::nn {

using ad::Parameter;
using ad::Tape;
using ad::Var;

// Owns parameters with stable addresses (tape nodes point at them).
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  Parameter* find(const std::string& name);

 private:
  std::deque<Parameter> params_;
};

Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape);
Tensor uniform_tensor(Rng& rng, Shape shape, double lo, double hi);

// Affine map x * W + b with W [in x out].
struct Dense {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Dense create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng);

  std::size_t in_features() const { return weight->value.shape()[0]; }
  std::size_t out_features() const { return weight->value.shape()[1]; }

  Var operator()(Tape& tape, Var x) const;
};

// Learnable LayerNorm gain (ones) and offset (zeros).
struct Norm {
  Parameter* gain = nullptr;
  Parameter* offset = nullptr;

  static Norm create(ParameterStore& store, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, Var x) const;
};

}  // namespace laya::nn
