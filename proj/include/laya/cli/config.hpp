#pragma once

// Declarative run configuration. A config file is a JSON object whose
// sections mirror the defaults below; unknown keys are rejected, and
// dotted-path overrides ("train.seeds=[7]") patch the merged document.
//
// {
//   "dataset":  {"kind": "idx" | "cifar10" | "text" | "synthetic_text" | "frozen", ...},
//   "backbone": {"kind": "mlp" | "cnn" | "text" | "frozen", "widths": [...], ...},
//   "head":     {"kind": "laya", "d_star": 96, "tau": 1.5, "psi": "identity", ...},
//   "train":    {"learning_rate": 0.001, "batch_size": 128, "seeds": [1, 2, 3, 4, 5], ...},
//   "grid":     {"d_star": [...], "tau": [...], "psi": [...], "scorer_width_factor": [...], "seeds": [...]},
//   "analysis": {"dump_samples": false},
//   "output":   "runs/name"
// }
//
// String paths may reference environment variables as ${NAME} or
// ${NAME:-fallback}. Relative paths resolve against the working directory.
// head.num_classes = 0 and train.learning_rate = null take their values from
// the dataset and backbone (1e-3, or 3e-4 for the cnn).

#include <string>
#include <vector>

#include "laya/io/json.hpp"
#include "laya/nn/model.hpp"
#include "laya/train/trainer.hpp"

namespace laya::cli {

struct DatasetConfig {
  std::string kind = "idx";
  std::string path;        // idx/cifar10 directory, or LFF file
  std::string manifest;    // frozen: optional split manifest
  std::string train_path;  // text: "label<TAB>text" files
  std::string test_path;
  std::size_t vocab_size = 20000;
  std::size_t seq_len = 256;
  std::size_t synthetic_train = 8000;
  std::size_t synthetic_test = 2000;
  std::uint64_t synthetic_seed = 0;
  std::uint64_t split_seed = 0;  // frozen without manifest: stratified 80/10/10
};

struct RunConfig {
  DatasetConfig dataset;
  nn::ModelConfig model;
  train::TrainConfig train;
  train::GridSpace grid;
  std::vector<std::uint64_t> grid_seeds;
  bool dump_samples = false;
  std::string output;
  io::Json resolved;  // merged document after overrides, before path expansion

  // Compact, key-sorted rendering of `resolved`; its SHA-256 identifies the run.
  std::string canonical_text() const;
  std::string hash() const;
};

io::Json default_config();

// "a.b.c=value"; value parsed as JSON when possible, else taken as a string.
void apply_override(io::Json& doc, const std::string& assignment);

// Merges `overlay` into `base`; keys absent from `base` raise ConfigError.
void merge_config(io::Json& base, const io::Json& overlay, const std::string& path = "");

RunConfig parse_run_config(const io::Json& merged);
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// Raises ConfigError when a path the dataset kind needs is empty or missing.
void check_dataset_paths(const DatasetConfig& dataset);

std::string expand_env(const std::string& value);

}  // namespace laya::cli
