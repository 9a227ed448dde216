#pragma once

// Training protocol: mini-batch Adam on cross-entropy, per-epoch validation
// accuracy, strict-improvement early stopping with restoration of the best
// epoch, then a test evaluation. Runs over several seeds may execute in
// parallel; each run is single-threaded and shares only read-only data.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "laya/data/dataset.hpp"
#include "laya/nn/model.hpp"
#include "laya/train/metrics.hpp"
#include "laya/train/optim.hpp"

namespace laya::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double val_fraction = 0.10;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t eval_batch_size = 500;

  void validate() const;
  AdamSettings adam() const { return {learning_rate, beta1, beta2, eps}; }
};

// Rows of a dataset selected by index.
struct DataView {
  const data::Dataset* dataset = nullptr;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  static DataView all(const data::Dataset& ds);
};

struct RunData {
  DataView train, val, test;
};

// Where a run's train/val/test rows come from. Without explicit indices the
// validation rows are the seed's split of `pool` and the test rows are all of
// `test` (or of `pool` when `test` is null).
struct DataSource {
  const data::Dataset* pool = nullptr;
  const data::Dataset* test = nullptr;
  std::optional<std::vector<std::size_t>> train_indices, val_indices, test_indices;

  RunData for_seed(std::uint64_t seed, double val_fraction) const;
};

struct Evaluation {
  Metrics metrics;
  std::vector<int> labels;
  std::vector<int> predictions;
  Tensor alpha;  // [n x L], empty for heads without attention
  double loss = 0.0;
};

Evaluation evaluate(nn::Model& model, const DataView& view, std::size_t batch_size = 500);

struct TrainHooks {
  // Replaces the measured validation accuracy of a 1-based epoch.
  std::function<double(std::size_t epoch, double measured)> validation_override;
  std::function<void(std::size_t epoch, const nn::Model& model)> on_epoch_end;
  std::function<void(const std::string&)> log;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::vector<double> val_curve;
  std::vector<double> train_loss;
  Evaluation test;
  std::vector<Tensor> parameters;  // restored best-epoch values
  double seconds = 0.0;
};

// Trains `model` in place and restores its best-validation parameters.
SeedResult train_model(nn::Model& model, const RunData& data, const TrainConfig& config, std::uint64_t seed,
                       const TrainHooks& hooks = {});

// Builds the model from the seed's init stream, then trains it.
SeedResult run_seed(const nn::ModelConfig& model_config, const TrainConfig& config, const DataSource& source,
                    std::uint64_t seed, const TrainHooks& hooks = {});

struct RunReport {
  nn::ModelConfig model;
  TrainConfig train;
  std::vector<SeedResult> seeds;
  Summary accuracy;
  Summary macro_f1;
  Summary val_accuracy;
  std::size_t parameter_count = 0;
  std::size_t head_parameter_count = 0;
  double wall_seconds = 0.0;
};

// Independent runs over config.seeds, `parallel` at a time; errors carry the
// failing seed.
RunReport multi_seed_run(const nn::ModelConfig& model_config, const TrainConfig& config, const DataSource& source,
                         std::size_t parallel = 1, const TrainHooks& hooks = {});

struct GridSpace {
  std::vector<std::size_t> d_star{64, 96, 128};
  std::vector<double> tau{0.5, 1.0, 1.5};
  std::vector<nn::PsiKind> psi{nn::PsiKind::identity, nn::PsiKind::mlp};
  std::vector<std::size_t> scorer_width_factor{1, 2};  // scorer width = factor * d*
};

struct GridPoint {
  nn::HeadConfig head;
  TrainConfig train;
};

// d* outermost, then tau, psi, scorer width.
std::vector<GridPoint> enumerate_grid(const GridSpace& space, const nn::HeadConfig& base, const TrainConfig& train);

struct GridEntry {
  GridPoint point;
  std::vector<double> val_accuracies;
  Summary val_accuracy;
};

struct GridResult {
  std::vector<GridEntry> entries;  // enumeration order
  std::size_t best = 0;

  // Entry indices by mean validation accuracy, descending; ties keep
  // enumeration order.
  std::vector<std::size_t> ranking() const;
};

// Each point runs over grid_seeds; the best mean validation accuracy wins,
// ties go to the earliest point.
GridResult grid_search(const std::vector<GridPoint>& points, const nn::BackboneConfig& backbone,
                       const std::vector<std::uint64_t>& grid_seeds, const DataSource& source,
                       std::size_t parallel = 1, const TrainHooks& hooks = {});

}  // namespace laya::train
