// laya: train, grid, analyze, frozen-train, gen-synthetic.
// Failures print one line "error: <category>: <message>" and exit nonzero.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "laya/cli/commands.hpp"
#include "laya/error.hpp"

using namespace laya;

namespace {

int fail(std::string_view category, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n') c = ' ';
  }
  std::fprintf(stderr, "error: %.*s: %s\n", static_cast<int>(category.size()), category.data(), line.c_str());
  return category == "usage" ? 2 : 1;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": '" + text + "' is not a comma-separated list of integers");
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
  return out;
}

void add_seed_list(std::vector<std::string>& overrides, const std::string& seed_list, const char* key) {
  if (seed_list.empty()) return;
  std::string json = "[";
  for (std::size_t s : parse_list(seed_list, "--seed-list")) json += (json.size() > 1 ? "," : "") + std::to_string(s);
  overrides.push_back(std::string(key) + "=" + json + "]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-attention heads over per-layer backbone states"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seed_list, lff_path, manifest_path;
  std::vector<std::string> overrides;
  std::size_t parallel = 0;
  bool quiet = false;

  auto add_run_flags = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "run configuration (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--parallel", parallel, "concurrent runs (default: number of seeds)");
    cmd->add_option("--seed-list", seed_list, "comma-separated seeds, replaces the config's list");
    cmd->add_flag("--quiet", quiet, "no per-epoch progress on stderr");
    cmd->add_option("overrides", overrides, "dotted-path overrides, e.g. train.max_epochs=5");
  };

  auto* train_cmd = app.add_subcommand("train", "train over the configured seeds");
  add_run_flags(train_cmd, true);
  auto* grid_cmd = app.add_subcommand("grid", "grid search over the head hyperparameters");
  add_run_flags(grid_cmd, true);
  auto* frozen_cmd = app.add_subcommand("frozen-train", "train a head on stored per-layer features");
  frozen_cmd->add_option("--lff", lff_path, "LFF feature file")->required();
  frozen_cmd->add_option("--manifest", manifest_path, "split manifest (default: stratified 80/10/10)");
  add_run_flags(frozen_cmd, false);

  std::string report_dir;
  auto* analyze_cmd = app.add_subcommand("analyze", "recompute attention statistics for a run directory");
  analyze_cmd->add_option("report_dir", report_dir, "directory written by train or frozen-train")->required();
  analyze_cmd->add_option("--out", out_dir, "output directory (default: report_dir)");

  cli::SyntheticOptions syn;
  std::string syn_dims = "16,16,16";
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic LFF file or text corpus");
  gen_cmd->add_option("--out", out_dir, "output directory")->required();
  gen_cmd->add_option("--kind", syn.kind, "lff | text")->capture_default_str();
  gen_cmd->add_option("--n", syn.lff.n, "samples (lff)")->capture_default_str();
  gen_cmd->add_option("--dims", syn_dims, "layer widths (lff)")->capture_default_str();
  gen_cmd->add_option("--classes", syn.lff.num_classes, "classes (lff)")->capture_default_str();
  gen_cmd->add_option("--informative", syn.lff.informative_layer, "1-based informative layer (lff)")
      ->capture_default_str();
  gen_cmd->add_option("--separation", syn.lff.separation, "class separation in sigmas (lff)")->capture_default_str();
  gen_cmd->add_option("--train", syn.text_train, "training texts (text)")->capture_default_str();
  gen_cmd->add_option("--test", syn.text_test, "test texts (text)")->capture_default_str();
  gen_cmd->add_option("--seed", syn.lff.seed, "generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    cli::CommandOptions options;
    options.out_dir = out_dir;
    options.quiet = quiet;
    if (parallel > 0) options.parallel = parallel;

    if (*train_cmd) {
      add_seed_list(overrides, seed_list, "train.seeds");
      const auto outcome = cli::cmd_train(cli::load_run_config(config_path, overrides), options);
      const auto& acc = outcome.report.accuracy;
      std::printf("%s: test accuracy %.4f +- %.4f over %zu seeds\n", outcome.out_dir.c_str(), acc.mean, acc.std,
                  acc.n);
    } else if (*grid_cmd) {
      add_seed_list(overrides, seed_list, "grid.seeds");
      const auto outcome = cli::cmd_grid(cli::load_run_config(config_path, overrides), options);
      const auto& best = outcome.result.entries[outcome.result.best];
      std::printf("%s: best %s, mean val accuracy %.4f\n", outcome.out_dir.c_str(),
                  best.point.head.describe().c_str(), best.val_accuracy.mean);
    } else if (*frozen_cmd) {
      add_seed_list(overrides, seed_list, "train.seeds");
      const auto outcome =
          cli::cmd_frozen_train(cli::frozen_run_config(lff_path, manifest_path, config_path, overrides), options);
      const auto& acc = outcome.report.accuracy;
      std::printf("%s: test accuracy %.4f +- %.4f over %zu seeds\n", outcome.out_dir.c_str(), acc.mean, acc.std,
                  acc.n);
    } else if (*analyze_cmd) {
      const auto files = cli::cmd_analyze(report_dir, out_dir);
      for (const auto& f : files) std::printf("%s\n", f.c_str());
    } else if (*gen_cmd) {
      syn.lff.dims = parse_list(syn_dims, "--dims");
      for (const auto& f : cli::cmd_gen_synthetic(out_dir, syn)) std::printf("%s\n", f.c_str());
    }
  } catch (const Error& e) {
    return fail(e.category(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
