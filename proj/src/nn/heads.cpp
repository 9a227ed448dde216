#include "laya/nn/heads.hpp"

#include <cmath>
#include <sstream>

#include "laya/error.hpp"

namespace laya::nn {

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::last_layer:
      return "last_layer";
    case HeadKind::concat:
      return "concat";
    case HeadKind::scalar_mix:
      return "scalar_mix";
    case HeadKind::laya:
      return "laya";
  }
  return "unknown";
}

std::string to_string(PsiKind kind) { return kind == PsiKind::mlp ? "mlp" : "identity"; }

HeadKind parse_head_kind(const std::string& name) {
  if (name == "last_layer") return HeadKind::last_layer;
  if (name == "concat") return HeadKind::concat;
  if (name == "scalar_mix") return HeadKind::scalar_mix;
  if (name == "laya") return HeadKind::laya;
  throw ConfigError("head.kind: unknown head '" + name + "'");
}

PsiKind parse_psi_kind(const std::string& name) {
  if (name == "identity") return PsiKind::identity;
  if (name == "mlp") return PsiKind::mlp;
  throw ConfigError("head.psi: unknown transform '" + name + "'");
}

void HeadConfig::validate() const {
  if (num_classes == 0) throw ConfigError("head.num_classes must be positive");
  if (kind == HeadKind::last_layer) return;
  if (d_star == 0) throw ConfigError("head.d_star must be positive");
  if (kind != HeadKind::laya) return;
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ParameterError("head.tau must be a positive finite number, got " + std::to_string(tau));
  }
  if (scorer_width == 0) throw ConfigError("head.scorer_width must be positive");
}

std::string HeadConfig::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == HeadKind::laya) {
    os << "(d*=" << d_star << ", tau=" << tau << ", psi=" << to_string(psi) << ", w=" << scorer_width
       << ")";
  } else if (kind != HeadKind::last_layer) {
    os << "(d*=" << d_star << ")";
  }
  return os.str();
}

std::size_t count_parameters(const HeadConfig& config, const std::vector<std::size_t>& dims) {
  const std::size_t L = dims.size();
  const std::size_t d = config.d_star;
  const std::size_t C = config.num_classes;
  if (config.kind == HeadKind::last_layer) return dims.back() * C + C;

  std::size_t count = 0;
  for (std::size_t di : dims) count += di * d + d;
  count += d * C + C;
  switch (config.kind) {
    case HeadKind::concat:
      count += L * d * d + d;
      break;
    case HeadKind::scalar_mix:
      count += L;
      break;
    case HeadKind::laya: {
      const std::size_t w = config.scorer_width;
      if (config.psi == PsiKind::mlp) count += 2 * (d * d + d);
      count += (L * d * w + w) + (w * L + L);
      break;
    }
    case HeadKind::last_layer:
      break;
  }
  return count;
}

Head::Head(const HeadConfig& config, std::vector<std::size_t> dims, Rng& rng)
    : config_(config), dims_(std::move(dims)) {
  config_.validate();
  if (dims_.empty()) throw ConfigError("head needs at least one layer");
  const std::size_t L = dims_.size();
  const std::size_t d = config_.d_star;
  const std::size_t C = config_.num_classes;

  if (config_.kind == HeadKind::last_layer) {
    layers_.classifier = Dense::create(params_, "head.classifier", dims_.back(), C, rng);
    return;
  }
  for (std::size_t i = 0; i < L; ++i) {
    layers_.adapters.push_back(
        Dense::create(params_, "head.adapter" + std::to_string(i + 1), dims_[i], d, rng));
  }
  switch (config_.kind) {
    case HeadKind::concat:
      layers_.concat_post = Dense::create(params_, "head.concat_post", L * d, d, rng);
      break;
    case HeadKind::scalar_mix:
      layers_.mix_logits = &params_.add("head.mix_logits", Tensor({L}));
      break;
    case HeadKind::laya:
      if (config_.psi == PsiKind::mlp) {
        layers_.psi_hidden = Dense::create(params_, "head.psi.hidden", d, d, rng);
        layers_.psi_out = Dense::create(params_, "head.psi.out", d, d, rng);
      }
      layers_.scorer_hidden = Dense::create(params_, "head.scorer.hidden", L * d, config_.scorer_width, rng);
      layers_.scorer_out = Dense::create(params_, "head.scorer.out", config_.scorer_width, L, rng);
      break;
    case HeadKind::last_layer:
      break;
  }
  layers_.classifier = Dense::create(params_, "head.classifier", d, C, rng);
}

void Head::set_tau(double tau) {
  HeadConfig next = config_;
  next.tau = tau;
  next.validate();
  config_ = next;
}

void Head::check_states(const LayerStates& states) const {
  states.validate();
  if (config_.kind == HeadKind::last_layer) {
    if (states.dims.back() != layers_.classifier.in_features()) {
      throw DimensionError("last_layer classifier expects width " +
                           std::to_string(layers_.classifier.in_features()) + ", deepest state has " +
                           std::to_string(states.dims.back()));
    }
    return;
  }
  if (states.depth() != layers_.adapters.size()) {
    throw ConfigError("head has " + std::to_string(layers_.adapters.size()) + " adapters but " +
                      std::to_string(states.depth()) + " layer states were given");
  }
  for (std::size_t i = 0; i < states.depth(); ++i) {
    if (states.dims[i] != layers_.adapters[i].in_features()) {
      throw ConfigError("adapter " + std::to_string(i + 1) + " expects width " +
                        std::to_string(layers_.adapters[i].in_features()) + ", state has " +
                        std::to_string(states.dims[i]));
    }
  }
}

std::vector<Var> Head::adapt(Tape& tape, const LayerStates& states) const {
  std::vector<Var> z;
  z.reserve(states.depth());
  for (std::size_t i = 0; i < states.depth(); ++i) z.push_back(layers_.adapters[i](tape, states.states[i]));
  return z;
}

HeadOutput Head::forward(Tape& tape, const LayerStates& states) const {
  check_states(states);
  HeadOutput out;
  switch (config_.kind) {
    case HeadKind::last_layer:
      out.h_agg = states.states.back();
      break;
    case HeadKind::concat: {
      const auto z = adapt(tape, states);
      out.h_agg = ops::gelu(layers_.concat_post(tape, ops::concat_cols(z)));
      break;
    }
    case HeadKind::scalar_mix: {
      const std::size_t L = states.depth();
      Var s = ops::reshape(tape.parameter(*layers_.mix_logits), {1, L});
      Var alpha = ops::softmax_temperature(s, 1.0);
      const auto z = adapt(tape, states);
      out.h_agg = ops::mix(alpha, z);
      // the same weights for every row, materialised as [batch x L]
      out.alpha = ops::matmul(tape.constant(Tensor({states.batch_size(), 1}, 1.0)), alpha);
      break;
    }
    case HeadKind::laya: {
      const auto z = adapt(tape, states);
      std::vector<Var> u = z;
      if (config_.psi == PsiKind::mlp) {
        for (auto& ui : u) ui = layers_.psi_out(tape, ops::gelu(layers_.psi_hidden(tape, ui)));
      }
      Var s = layers_.scorer_out(tape, ops::gelu(layers_.scorer_hidden(tape, ops::concat_cols(u))));
      out.alpha = ops::softmax_temperature(s, config_.tau);
      out.h_agg = ops::mix(out.alpha, z);
      break;
    }
  }
  out.logits = layers_.classifier(tape, out.h_agg);
  return out;
}

}  // namespace laya::nn
