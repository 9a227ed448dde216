#pragma once

// Output heads over per-layer states: LastLayer, Concat, ScalarMix and the
// input-conditioned depth attention head (LAYA).

#include <string>
#include <vector>

#include "laya/nn/backbones.hpp"

namespace laya::nn {

enum class HeadKind { last_layer, concat, scalar_mix, laya };
enum class PsiKind { identity, mlp };

std::string to_string(HeadKind kind);
std::string to_string(PsiKind kind);
HeadKind parse_head_kind(const std::string& name);
PsiKind parse_psi_kind(const std::string& name);

struct HeadConfig {
  HeadKind kind = HeadKind::laya;
  std::size_t d_star = 96;
  double tau = 1.0;
  PsiKind psi = PsiKind::identity;
  std::size_t scorer_width = 192;
  std::size_t num_classes = 10;

  // tau <= 0 -> ParameterError; zero sizes -> ConfigError.
  void validate() const;
  std::string describe() const;
};

// Closed-form parameter count of a head over layers of width `dims`.
std::size_t count_parameters(const HeadConfig& config, const std::vector<std::size_t>& dims);

struct HeadOutput {
  Var logits;
  Var alpha;  // [batch x L]; invalid for last_layer and concat
  Var h_agg;  // classifier input
};

// All head parameters. Members a head kind does not use stay null/empty.
struct HeadLayers {
  std::vector<Dense> adapters;
  Dense psi_hidden, psi_out;
  Dense scorer_hidden, scorer_out;
  Dense concat_post;
  Parameter* mix_logits = nullptr;
  Dense classifier;
};

class Head {
 public:
  Head(const HeadConfig& config, std::vector<std::size_t> dims, Rng& rng);

  HeadOutput forward(Tape& tape, const LayerStates& states) const;

  const HeadConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  void set_tau(double tau);

  HeadLayers& layers() noexcept { return layers_; }
  const HeadLayers& layers() const noexcept { return layers_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

 private:
  void check_states(const LayerStates& states) const;
  std::vector<Var> adapt(Tape& tape, const LayerStates& states) const;

  HeadConfig config_;
  std::vector<std::size_t> dims_;
  ParameterStore params_;
  HeadLayers layers_;
};

}  // namespace laya::nn
