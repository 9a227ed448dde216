#pragma once

// The subcommands behind the `laya` executable. Each writes its outputs into
// one directory and throws a laya::Error subclass on failure.
//
// train / frozen-train:
//   report.json     RunReport; wall-clock fields live under "timing" only
//   metrics.csv     seed,epochs_run,best_epoch,best_val_accuracy,test_accuracy,test_macro_f1,test_loss
//   config.json     the merged config before path expansion
//   params.bin      best-epoch parameters of the first seed
//   attn_*.csv      attention of the first seed on the test split (heads with alpha)
//   vocab.tsv       text datasets only
// grid:
//   leaderboard.csv rank,d_star,tau,psi,scorer_width,mean_val_accuracy,std_val_accuracy,val_accuracies
//   best_config.json, grid.json
// analyze:
//   recomputes the attention files from config.json + params.bin

#include <optional>
#include <string>
#include <vector>

#include "laya/cli/config.hpp"
#include "laya/data/lff.hpp"
#include "laya/data/text.hpp"

namespace laya::cli {

struct CommandOptions {
  std::string out_dir;                  // empty: config "output", else ${LAYA_OUT:-runs}/<command>-<hash>
  std::optional<std::size_t> parallel;  // default: number of seeds
  bool quiet = false;
};

// Datasets resolved from a config, plus the split bookkeeping a DataSource
// points into. Not copyable once source() has been taken.
struct LoadedData {
  data::DatasetPair splits;  // frozen: train holds every sample, test unused
  bool frozen = false;
  std::optional<data::SplitManifest> manifest;
  std::optional<data::Vocabulary> vocab;

  train::DataSource source() const;
};

// Loads the dataset and completes `config.model` from it: num_classes when 0,
// frozen feature widths; mismatches raise ConfigError.
LoadedData load_data(RunConfig& config);

std::string resolve_output_dir(const RunConfig& config, const std::string& cli_out, const std::string& command);

struct TrainOutcome {
  std::string out_dir;
  train::RunReport report;
};

TrainOutcome cmd_train(RunConfig config, const CommandOptions& options);

// Config for head-only training on an LFF file: frozen dataset and backbone,
// then the optional config file, then overrides.
RunConfig frozen_run_config(const std::string& lff_path, const std::string& manifest_path,
                            const std::string& config_path, const std::vector<std::string>& overrides);
TrainOutcome cmd_frozen_train(RunConfig config, const CommandOptions& options);

struct GridOutcome {
  std::string out_dir;
  train::GridResult result;
};

GridOutcome cmd_grid(RunConfig config, const CommandOptions& options);

// Writes to out_dir (default: report_dir); returns the written file names.
std::vector<std::string> cmd_analyze(const std::string& report_dir, const std::string& out_dir = "");

struct SyntheticOptions {
  std::string kind = "lff";  // lff | text
  data::SyntheticLffSpec lff;
  std::size_t text_train = 8000;
  std::size_t text_test = 2000;
};

// lff: synthetic.lff + split.json (stratified 80/10/10);
// text: train.tsv + test.tsv.
std::vector<std::string> cmd_gen_synthetic(const std::string& out_dir, const SyntheticOptions& options);

// Loaders for the files above.
struct MetricsRow {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0, best_epoch = 0;
  double best_val_accuracy = 0, test_accuracy = 0, test_macro_f1 = 0, test_loss = 0;
};
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

struct LeaderboardRow {
  std::size_t rank = 0;
  nn::HeadConfig head;
  double mean_val_accuracy = 0, std_val_accuracy = 0;
  std::vector<double> val_accuracies;
};
std::vector<LeaderboardRow> read_leaderboard_csv(const std::string& path);

io::Json report_json(const train::RunReport& report, const RunConfig& config, const LoadedData& data,
                     const std::string& command, const io::Json& attention);

}  // namespace laya::cli
