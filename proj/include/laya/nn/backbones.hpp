#pragma once

// Feature extractors that expose every hidden representation, in depth order,
// to whichever output head sits on top.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "laya/nn/parameters.hpp"

namespace laya::nn {

enum class BackboneKind { mlp, cnn, text, frozen };

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone_kind(const std::string& name);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::mlp;
  // Hidden widths (mlp), stage channel counts (cnn) or dense block widths (text).
  std::vector<std::size_t> widths{512, 256, 128};
  std::size_t input_dim = 784;
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::size_t image_channels = 3;
  std::size_t kernel_size = 3;
  std::size_t vocab_size = 20000;
  std::size_t embedding_dim = 128;
  std::size_t seq_len = 256;
  // Per-layer feature widths of a frozen feature file.
  std::vector<std::size_t> feature_dims;

  void validate() const;
  std::vector<std::size_t> state_dims() const;
};

// One mini-batch as seen by a backbone. Dense inputs live in `features`
// (images as [rows x H x W x C], frozen features as [rows x sum(d_i)]);
// token inputs live in `tokens` ([rows x seq_len], row-major).
struct BatchInput {
  std::size_t rows = 0;
  Tensor features;
  std::vector<std::int32_t> tokens;
  std::size_t seq_len = 0;
  std::vector<int> labels;
};

struct LayerStates {
  std::vector<Var> states;
  std::vector<std::size_t> dims;

  std::size_t depth() const noexcept { return states.size(); }
  std::size_t batch_size() const { return states.empty() ? 0 : states.front().shape()[0]; }
  void validate() const;
};

class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual LayerStates forward(Tape& tape, const BatchInput& batch) = 0;
  virtual std::vector<std::size_t> dims() const = 0;
  virtual BackboneKind kind() const = 0;

  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

 protected:
  ParameterStore params_;
};

// Dense -> LayerNorm -> GELU per layer; states are post-activation.
class MlpBackbone final : public Backbone {
 public:
  MlpBackbone(const BackboneConfig& config, Rng& rng);
  LayerStates forward(Tape& tape, const BatchInput& batch) override;
  std::vector<std::size_t> dims() const override { return widths_; }
  BackboneKind kind() const override { return BackboneKind::mlp; }

 private:
  std::size_t input_dim_;
  std::vector<std::size_t> widths_;
  std::vector<Dense> layers_;
  std::vector<Norm> norms_;
};

// Depthwise 3x3 -> pointwise 1x1 -> LayerNorm (over channels) -> GELU per
// stage, with 2x2 average-pool downsampling in front of every stage after the
// first. State i is the global average pool of stage i.
class CnnBackbone final : public Backbone {
 public:
  CnnBackbone(const BackboneConfig& config, Rng& rng);
  LayerStates forward(Tape& tape, const BatchInput& batch) override;
  std::vector<std::size_t> dims() const override { return channels_; }
  BackboneKind kind() const override { return BackboneKind::cnn; }

  // Spatial extent (height, width) seen by each stage.
  std::vector<std::pair<std::size_t, std::size_t>> stage_extents() const;

 private:
  struct Stage {
    Parameter* depthwise_kernel;
    Parameter* depthwise_bias;
    Dense pointwise;
    Norm norm;
  };
  std::size_t height_, width_, in_channels_;
  std::vector<std::size_t> channels_;
  std::vector<Stage> stages_;
};

// Bag of embeddings: lookup, mean over non-padding tokens, then stacked
// Dense -> LayerNorm -> GELU blocks. Token id 0 is padding.
class TextBackbone final : public Backbone {
 public:
  TextBackbone(const BackboneConfig& config, Rng& rng);
  LayerStates forward(Tape& tape, const BatchInput& batch) override;
  std::vector<std::size_t> dims() const override { return widths_; }
  BackboneKind kind() const override { return BackboneKind::text; }

  // Masked mean of token embeddings, before the dense blocks.
  Var pool(Tape& tape, const BatchInput& batch);

 private:
  std::size_t vocab_size_, embedding_dim_;
  std::vector<std::size_t> widths_;
  Parameter* embedding_;
  std::vector<Dense> layers_;
  std::vector<Norm> norms_;
};

// Pre-extracted per-layer features: splits the concatenated feature row into
// L constant states. Has no parameters.
class FrozenFeatures final : public Backbone {
 public:
  explicit FrozenFeatures(std::vector<std::size_t> dims);
  LayerStates forward(Tape& tape, const BatchInput& batch) override;
  std::vector<std::size_t> dims() const override { return dims_; }
  BackboneKind kind() const override { return BackboneKind::frozen; }

 private:
  std::vector<std::size_t> dims_;
};

std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config, Rng& rng);

}  // namespace laya::nn
