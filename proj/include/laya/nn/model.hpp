#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "laya/nn/backbones.hpp"
#include "laya/nn/heads.hpp"

namespace laya::nn {

struct ModelConfig {
  BackboneConfig backbone;
  HeadConfig head;
};

// Backbone plus head. Initialisation draws from the seed's init stream,
// backbone first, then head.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  HeadOutput forward(Tape& tape, const BatchInput& batch);

  Backbone& backbone() noexcept { return *backbone_; }
  const Backbone& backbone() const noexcept { return *backbone_; }
  Head& head() noexcept { return *head_; }
  const Head& head() const noexcept { return *head_; }
  const ModelConfig& config() const noexcept { return config_; }

  // Trainable parameters in a fixed order: backbone, then head.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  ModelConfig config_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<Head> head_;
};

}  // namespace laya::nn
