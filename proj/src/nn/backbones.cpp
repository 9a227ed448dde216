#include "laya/nn/backbones.hpp"

#include <algorithm>
#include <numeric>

#include "laya/error.hpp"

namespace laya::nn {

std::string to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::mlp:
      return "mlp";
    case BackboneKind::cnn:
      return "cnn";
    case BackboneKind::text:
      return "text";
    case BackboneKind::frozen:
      return "frozen";
  }
  return "unknown";
}

BackboneKind parse_backbone_kind(const std::string& name) {
  if (name == "mlp") return BackboneKind::mlp;
  if (name == "cnn") return BackboneKind::cnn;
  if (name == "text") return BackboneKind::text;
  if (name == "frozen") return BackboneKind::frozen;
  throw ConfigError("backbone.kind: unknown backbone '" + name + "'");
}

void BackboneConfig::validate() const {
  const auto positive = [](const std::vector<std::size_t>& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](std::size_t w) { return w > 0; });
  };
  switch (kind) {
    case BackboneKind::mlp:
      if (!positive(widths) || input_dim == 0) {
        throw ConfigError("backbone: mlp needs positive widths and input_dim");
      }
      break;
    case BackboneKind::cnn:
      if (!positive(widths) || image_channels == 0 || kernel_size % 2 == 0) {
        throw ConfigError("backbone: cnn needs positive channels, input channels and odd kernel");
      }
      if (image_height % (std::size_t{1} << (widths.size() - 1)) != 0 ||
          image_width % (std::size_t{1} << (widths.size() - 1)) != 0 || image_height == 0 ||
          image_width == 0) {
        throw ConfigError("backbone: cnn image extents must be divisible by 2^(stages-1)");
      }
      break;
    case BackboneKind::text:
      if (!positive(widths) || vocab_size < 2 || embedding_dim == 0 || seq_len == 0) {
        throw ConfigError("backbone: text needs positive widths, vocab_size >= 2, embedding_dim, seq_len");
      }
      break;
    case BackboneKind::frozen:
      if (!positive(feature_dims)) throw ConfigError("backbone: frozen needs positive feature_dims");
      break;
  }
}

std::vector<std::size_t> BackboneConfig::state_dims() const {
  return kind == BackboneKind::frozen ? feature_dims : widths;
}

void LayerStates::validate() const {
  if (states.empty()) throw DimensionError("layer states are empty");
  if (states.size() != dims.size()) throw DimensionError("layer states and dims disagree in length");
  const std::size_t batch = batch_size();
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].shape() != Shape{batch, dims[i]}) {
      throw DimensionError("layer state " + std::to_string(i) + " has shape " +
                           shape_str(states[i].shape()) + ", expected [" + std::to_string(batch) +
                           "x" + std::to_string(dims[i]) + "]");
    }
  }
}

// --- MLP -------------------------------------------------------------------

MlpBackbone::MlpBackbone(const BackboneConfig& config, Rng& rng)
    : input_dim_(config.input_dim), widths_(config.widths) {
  std::size_t in = input_dim_;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    const std::string name = "backbone.dense" + std::to_string(i + 1);
    layers_.push_back(Dense::create(params_, name, in, widths_[i], rng));
    norms_.push_back(Norm::create(params_, "backbone.norm" + std::to_string(i + 1), widths_[i]));
    in = widths_[i];
  }
}

LayerStates MlpBackbone::forward(Tape& tape, const BatchInput& batch) {
  if (batch.features.size() != batch.rows * input_dim_ || batch.rows == 0) {
    throw DimensionError("mlp backbone expects " + std::to_string(input_dim_) +
                         " input features per row, got " + shape_str(batch.features.shape()));
  }
  Var h = tape.constant(batch.features.reshaped({batch.rows, input_dim_}));
  LayerStates out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = ops::gelu(norms_[i](tape, layers_[i](tape, h)));
    out.states.push_back(h);
    out.dims.push_back(widths_[i]);
  }
  return out;
}

// --- CNN -------------------------------------------------------------------

CnnBackbone::CnnBackbone(const BackboneConfig& config, Rng& rng)
    : height_(config.image_height),
      width_(config.image_width),
      in_channels_(config.image_channels),
      channels_(config.widths) {
  const std::size_t k = config.kernel_size;
  std::size_t in = in_channels_;
  for (std::size_t s = 0; s < channels_.size(); ++s) {
    const std::string name = "backbone.stage" + std::to_string(s + 1);
    Stage stage{};
    // each depthwise filter sees k*k inputs and produces k*k-weighted outputs of one channel
    stage.depthwise_kernel =
        &params_.add(name + ".depthwise.kernel", glorot_uniform(rng, k * k, k * k, {k, k, in}));
    stage.depthwise_bias = &params_.add(name + ".depthwise.bias", Tensor({in}));
    stage.pointwise = Dense::create(params_, name + ".pointwise", in, channels_[s], rng);
    stage.norm = Norm::create(params_, name + ".norm", channels_[s]);
    stages_.push_back(stage);
    in = channels_[s];
  }
}

LayerStates CnnBackbone::forward(Tape& tape, const BatchInput& batch) {
  const Shape expected{batch.rows, height_, width_, in_channels_};
  if (batch.features.shape() != expected || batch.rows == 0) {
    throw DimensionError("cnn backbone expects input " + shape_str(expected) + ", got " +
                         shape_str(batch.features.shape()));
  }
  Var x = tape.constant(batch.features);
  LayerStates out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const Stage& st = stages_[s];
    if (s > 0) x = ops::avg_pool2x2(x);
    x = ops::depthwise_conv2d(x, tape.parameter(*st.depthwise_kernel),
                              tape.parameter(*st.depthwise_bias));
    x = ops::pointwise_conv2d(x, tape.parameter(*st.pointwise.weight),
                              tape.parameter(*st.pointwise.bias));
    x = ops::gelu(st.norm(tape, x));
    out.states.push_back(ops::global_avg_pool(x));
    out.dims.push_back(channels_[s]);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> CnnBackbone::stage_extents() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t h = height_, w = width_;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) h /= 2, w /= 2;
    out.emplace_back(h, w);
  }
  return out;
}

// --- Text ------------------------------------------------------------------

TextBackbone::TextBackbone(const BackboneConfig& config, Rng& rng)
    : vocab_size_(config.vocab_size), embedding_dim_(config.embedding_dim), widths_(config.widths) {
  embedding_ = &params_.add("backbone.embedding",
                            uniform_tensor(rng, {vocab_size_, embedding_dim_}, -0.05, 0.05));
  std::size_t in = embedding_dim_;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    layers_.push_back(Dense::create(params_, "backbone.block" + std::to_string(i + 1), in, widths_[i], rng));
    norms_.push_back(Norm::create(params_, "backbone.norm" + std::to_string(i + 1), widths_[i]));
    in = widths_[i];
  }
}

Var TextBackbone::pool(Tape& tape, const BatchInput& batch) {
  if (batch.rows == 0 || batch.tokens.size() != batch.rows * batch.seq_len) {
    throw DimensionError("text backbone expects rows x seq_len tokens, got " +
                         std::to_string(batch.tokens.size()) + " for " + std::to_string(batch.rows) +
                         " rows");
  }
  return ops::embedding_bag_mean(tape.parameter(*embedding_), batch.tokens, batch.rows, batch.seq_len);
}

LayerStates TextBackbone::forward(Tape& tape, const BatchInput& batch) {
  Var h = pool(tape, batch);
  LayerStates out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = ops::gelu(norms_[i](tape, layers_[i](tape, h)));
    out.states.push_back(h);
    out.dims.push_back(widths_[i]);
  }
  return out;
}

// --- Frozen features ---------------------------------------------------------

FrozenFeatures::FrozenFeatures(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

LayerStates FrozenFeatures::forward(Tape& tape, const BatchInput& batch) {
  const std::size_t total = std::accumulate(dims_.begin(), dims_.end(), std::size_t{0});
  if (batch.features.shape() != Shape{batch.rows, total} || batch.rows == 0) {
    throw DimensionError("frozen features expect [rows x " + std::to_string(total) + "], got " +
                         shape_str(batch.features.shape()));
  }
  LayerStates out;
  std::size_t offset = 0;
  for (std::size_t d : dims_) {
    Tensor part({batch.rows, d});
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const double* src = batch.features.data() + r * total + offset;
      std::copy(src, src + d, part.data() + r * d);
    }
    out.states.push_back(tape.constant(std::move(part)));
    out.dims.push_back(d);
    offset += d;
  }
  return out;
}

std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config, Rng& rng) {
  config.validate();
  switch (config.kind) {
    case BackboneKind::mlp:
      return std::make_unique<MlpBackbone>(config, rng);
    case BackboneKind::cnn:
      return std::make_unique<CnnBackbone>(config, rng);
    case BackboneKind::text:
      return std::make_unique<TextBackbone>(config, rng);
    case BackboneKind::frozen:
      return std::make_unique<FrozenFeatures>(config.feature_dims);
  }
  throw ConfigError("backbone: unsupported kind");
}

}  // namespace laya::nn
