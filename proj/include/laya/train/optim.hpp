#pragma once

#include <cstddef>
#include <vector>

#include "laya/autodiff/tape.hpp"

namespace laya::train {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction; one (m, v) pair per parameter. Parameters whose
// gradient is absent are treated as having a zero gradient.
class Adam {
 public:
  Adam(std::vector<ad::Parameter*> params, AdamSettings settings);

  void step();
  std::size_t timestep() const noexcept { return t_; }
  const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor& second_moment(std::size_t i) const { return v_.at(i); }
  const AdamSettings& settings() const noexcept { return settings_; }

 private:
  std::vector<ad::Parameter*> params_;
  AdamSettings settings_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

// Validation-driven early stopping: a score counts as an improvement only if
// strictly greater than the best so far. Epochs are 1-based.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);

  // Records one epoch; returns true when it is the new best.
  bool observe(double score);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_score() const noexcept { return best_; }
  std::size_t epochs() const noexcept { return epochs_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

}  // namespace laya::train
