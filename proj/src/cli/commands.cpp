#include "laya/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "laya/analysis/attention.hpp"
#include "laya/data/images.hpp"
#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/io/csv.hpp"
#include "laya/io/param_dump.hpp"

namespace laya::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

train::TrainHooks make_hooks(bool quiet) {
  train::TrainHooks hooks;
  if (!quiet) hooks.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
  return hooks;
}

std::size_t infer_classes(const std::vector<int>& a, const std::vector<int>& b) {
  int top = 1;
  for (int v : a) top = std::max(top, v);
  for (int v : b) top = std::max(top, v);
  return static_cast<std::size_t>(top) + 1;
}

void settle_num_classes(nn::HeadConfig& head, std::size_t from_data) {
  if (head.num_classes == 0) {
    head.num_classes = from_data;
  } else if (head.num_classes != from_data) {
    throw ConfigError("head.num_classes: config says " + std::to_string(head.num_classes) + ", data has " +
                      std::to_string(from_data));
  }
}

void check_dense_input(const nn::BackboneConfig& b, const data::Dataset& ds) {
  if (b.kind == nn::BackboneKind::mlp && b.input_dim != ds.sample_size()) {
    throw ConfigError("backbone.input_dim: config says " + std::to_string(b.input_dim) + ", samples have " +
                      std::to_string(ds.sample_size()) + " values");
  }
  if (b.kind == nn::BackboneKind::cnn) {
    const Shape want{b.image_height, b.image_width, b.image_channels};
    if (ds.sample_shape != want) {
      throw ConfigError("backbone image size " + shape_str(want) + " does not match the data " +
                        shape_str(ds.sample_shape));
    }
  }
}

Json summary_json(const train::Summary& s) {
  return Json{{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
}

Json head_json(const nn::HeadConfig& h) {
  return Json{{"kind", nn::to_string(h.kind)},  {"d_star", h.d_star},
              {"tau", h.tau},                   {"psi", nn::to_string(h.psi)},
              {"scorer_width", h.scorer_width}, {"num_classes", h.num_classes}};
}

io::NamedTensors named_parameters(const nn::ModelConfig& mc, std::uint64_t seed, const std::vector<Tensor>& values) {
  nn::Model model(mc, seed);
  const auto params = model.parameters();
  if (params.size() != values.size()) throw ContractError("parameter snapshot does not match the model");
  io::NamedTensors out;
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(params[i]->name, values[i]);
  return out;
}

void restore_named(nn::Model& model, const io::NamedTensors& dump, const std::string& source) {
  const auto params = model.parameters();
  if (params.size() != dump.size()) {
    throw FormatError(source + ": holds " + std::to_string(dump.size()) + " tensors, model has " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != dump[i].first || params[i]->value.shape() != dump[i].second.shape()) {
      throw FormatError(source + ": tensor " + std::to_string(i) + " is " + dump[i].first + " " +
                        shape_str(dump[i].second.shape()) + ", model expects " + params[i]->name + " " +
                        shape_str(params[i]->value.shape()));
    }
    params[i]->value = dump[i].second;
  }
}

bool has_attention(nn::HeadKind kind) { return kind == nn::HeadKind::laya || kind == nn::HeadKind::scalar_mix; }

std::string metrics_csv(const train::RunReport& report) {
  std::string out = "seed,epochs_run,best_epoch,best_val_accuracy,test_accuracy,test_macro_f1,test_loss\n";
  for (const auto& s : report.seeds) {
    out += std::to_string(s.seed) + "," + std::to_string(s.epochs_run) + "," + std::to_string(s.best_epoch) + "," +
           io::format_double(s.best_val_accuracy) + "," + io::format_double(s.test.metrics.accuracy) + "," +
           io::format_double(s.test.metrics.macro_f1) + "," + io::format_double(s.test.loss) + "\n";
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + io::format_double(v[i]);
  return out;
}

}  // namespace

train::DataSource LoadedData::source() const {
  train::DataSource s;
  s.pool = &splits.train;
  if (!frozen) s.test = &splits.test;
  if (manifest) {
    s.train_indices = manifest->train;
    s.val_indices = manifest->val;
    s.test_indices = manifest->test;
  }
  return s;
}

LoadedData load_data(RunConfig& config) {
  LoadedData out;
  const auto& d = config.dataset;
  auto& model = config.model;
  check_dataset_paths(d);
  if (d.kind == "idx") {
    out.splits = data::load_idx_dir(d.path);
    check_dense_input(model.backbone, out.splits.train);
  } else if (d.kind == "cifar10") {
    out.splits = data::load_cifar10_dir(d.path);
    check_dense_input(model.backbone, out.splits.train);
  } else if (d.kind == "text" || d.kind == "synthetic_text") {
    data::TextCorpus train, test;
    if (d.kind == "text") {
      train = data::read_corpus_tsv(d.train_path);
      test = data::read_corpus_tsv(d.test_path);
    } else {
      const auto all = data::generate_synthetic_corpus(d.synthetic_train + d.synthetic_test, d.synthetic_seed);
      const auto cut = static_cast<std::ptrdiff_t>(d.synthetic_train);
      train.texts.assign(all.texts.begin(), all.texts.begin() + cut);
      train.labels.assign(all.labels.begin(), all.labels.begin() + cut);
      test.texts.assign(all.texts.begin() + cut, all.texts.end());
      test.labels.assign(all.labels.begin() + cut, all.labels.end());
    }
    if (train.labels.empty()) throw DataError("text training corpus is empty");
    const std::size_t classes =
        model.head.num_classes != 0 ? model.head.num_classes : infer_classes(train.labels, test.labels);
    auto text = data::tokenize_corpus(train, test, d.vocab_size, d.seq_len, classes);
    out.vocab = std::move(text.vocab);
    out.splits = std::move(text.splits);
  } else if (d.kind == "frozen") {
    const auto set = data::load_frozen_features(d.path);
    if (set.size() == 0) throw DataError(d.path + ": LFF file has no samples");
    auto& b = model.backbone;
    if (!b.widths.empty() && b.widths != set.dims) {
      std::string want, have;
      for (auto v : b.widths) want += (want.empty() ? "" : ",") + std::to_string(v);
      for (auto v : set.dims) have += (have.empty() ? "" : ",") + std::to_string(v);
      throw ConfigError("backbone.widths: config says [" + want + "], LFF layers are [" + have + "]");
    }
    b.feature_dims = set.dims;
    out.frozen = true;
    out.manifest = d.manifest.empty()
                       ? data::stratified_split(set.labels, set.num_classes, 0.8, 0.1, d.split_seed)
                       : data::load_split_manifest(d.manifest, set.size());
    if (out.manifest->train.empty() || out.manifest->val.empty() || out.manifest->test.empty()) {
      throw DataError(d.path + ": split leaves an empty train, val or test set");
    }
    out.splits.train = data::to_dataset(set, "all");
  } else {
    throw ConfigError("dataset.kind: unknown dataset kind '" + d.kind + "'");
  }
  settle_num_classes(model.head, out.splits.train.num_classes);
  model.head.validate();
  return out;
}

std::string resolve_output_dir(const RunConfig& config, const std::string& cli_out, const std::string& command) {
  if (!cli_out.empty()) return cli_out;
  if (!config.output.empty()) return config.output;
  const char* env = std::getenv("LAYA_OUT");
  const std::string base = env != nullptr && *env != '\0' ? env : "runs";
  return join_path(base, command + "-" + config.hash().substr(0, 12));
}

io::Json report_json(const train::RunReport& report, const RunConfig& config, const LoadedData& data,
                     const std::string& command, const io::Json& attention) {
  Json j;
  j["format"] = "laya-run-report/1";
  j["command"] = command;
  j["config_sha256"] = config.hash();

  const auto source = data.source();
  const auto first = source.for_seed(config.train.seeds.front(), config.train.val_fraction);
  Json ds;
  ds["kind"] = config.dataset.kind;
  ds["num_classes"] = config.model.head.num_classes;
  ds["train_size"] = first.train.size();
  ds["val_size"] = first.val.size();
  ds["test_size"] = first.test.size();
  j["dataset"] = ds;

  Json model;
  model["backbone"] = nn::to_string(config.model.backbone.kind);
  model["layer_dims"] = config.model.backbone.state_dims();
  model["head"] = head_json(config.model.head);
  model["parameter_count"] = report.parameter_count;
  model["head_parameter_count"] = report.head_parameter_count;
  j["model"] = model;

  const auto& t = report.train;
  j["train"] = Json{{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}, {"max_epochs", t.max_epochs},
                    {"patience", t.patience},           {"val_fraction", t.val_fraction}, {"seeds", t.seeds},
                    {"beta1", t.beta1},                 {"beta2", t.beta2},               {"eps", t.eps}};

  Json seeds = Json::array();
  for (const auto& s : report.seeds) {
    Json e;
    e["seed"] = s.seed;
    e["epochs_run"] = s.epochs_run;
    e["best_epoch"] = s.best_epoch;
    e["best_val_accuracy"] = s.best_val_accuracy;
    e["val_accuracy_curve"] = s.val_curve;
    e["train_loss_curve"] = s.train_loss;
    const auto& m = s.test.metrics;
    e["test"] = Json{{"accuracy", m.accuracy},
                     {"macro_f1", m.macro_f1},
                     {"loss", s.test.loss},
                     {"per_class_f1", m.per_class_f1},
                     {"confusion", m.confusion}};
    seeds.push_back(e);
  }
  j["seeds"] = seeds;
  j["summary"] = Json{{"test_accuracy", summary_json(report.accuracy)},
                      {"test_macro_f1", summary_json(report.macro_f1)},
                      {"val_accuracy", summary_json(report.val_accuracy)}};
  j["attention"] = attention;

  Json per_seed = Json::array();
  for (const auto& s : report.seeds) per_seed.push_back(s.seconds);
  j["timing"] = Json{{"wall_seconds", report.wall_seconds}, {"seed_seconds", per_seed}};
  return j;
}

namespace {

TrainOutcome run_training(RunConfig config, const CommandOptions& options, const std::string& command) {
  if (config.train.seeds.empty()) throw ConfigError("train.seeds: at least one seed is required");
  LoadedData data = load_data(config);
  TrainOutcome outcome;
  outcome.out_dir = resolve_output_dir(config, options.out_dir, command);
  ensure_dir(outcome.out_dir);

  const auto source = data.source();
  outcome.report = train::multi_seed_run(config.model, config.train, source,
                                         options.parallel.value_or(config.train.seeds.size()),
                                         make_hooks(options.quiet));
  const auto& first = outcome.report.seeds.front();

  io::write_text(join_path(outcome.out_dir, "config.json"), io::dump_json(config.resolved) + "\n");
  io::write_parameters(join_path(outcome.out_dir, "params.bin"),
                       named_parameters(config.model, first.seed, first.parameters));
  if (data.vocab) data.vocab->save(join_path(outcome.out_dir, "vocab.tsv"));

  Json attention = nullptr;
  if (has_attention(config.model.head.kind)) {
    analysis::AttentionExport ex{first.test.alpha, first.test.labels, first.test.predictions,
                                 config.model.head.num_classes, config.dump_samples};
    const auto files = analysis::export_report(outcome.out_dir, ex, config.canonical_text());
    const auto stats = analysis::global_stats(first.test.alpha);
    attention = Json{{"source_seed", first.seed}, {"split", "test"},     {"samples", stats.count},
                     {"layers", stats.mean.size()}, {"mean", stats.mean}, {"std", stats.std},
                     {"files", files}};
  }
  io::write_text(join_path(outcome.out_dir, "metrics.csv"), metrics_csv(outcome.report));
  io::write_text(join_path(outcome.out_dir, "report.json"),
                 io::dump_json(report_json(outcome.report, config, data, command, attention)) + "\n");
  return outcome;
}

}  // namespace

TrainOutcome cmd_train(RunConfig config, const CommandOptions& options) {
  return run_training(std::move(config), options, "train");
}

TrainOutcome cmd_frozen_train(RunConfig config, const CommandOptions& options) {
  if (config.dataset.kind != "frozen") throw ConfigError("dataset.kind: frozen-train needs an LFF dataset");
  return run_training(std::move(config), options, "frozen-train");
}

RunConfig frozen_run_config(const std::string& lff_path, const std::string& manifest_path,
                            const std::string& config_path, const std::vector<std::string>& overrides) {
  Json doc = default_config();
  doc["dataset"]["kind"] = "frozen";
  doc["backbone"]["kind"] = "frozen";
  doc["backbone"]["widths"] = Json::array();
  if (!config_path.empty()) merge_config(doc, io::parse_json_file(config_path));
  if (!lff_path.empty()) doc["dataset"]["path"] = lff_path;
  if (!manifest_path.empty()) doc["dataset"]["manifest"] = manifest_path;
  for (const auto& o : overrides) apply_override(doc, o);
  if (doc["dataset"]["kind"] != "frozen" || doc["backbone"]["kind"] != "frozen") {
    throw ConfigError("frozen-train needs dataset.kind and backbone.kind \"frozen\"");
  }
  return parse_run_config(doc);
}

GridOutcome cmd_grid(RunConfig config, const CommandOptions& options) {
  const auto& g = config.grid;
  if (g.d_star.empty() || g.tau.empty() || g.psi.empty() || g.scorer_width_factor.empty()) {
    throw UsageError("grid: every value list (d_star, tau, psi, scorer_width_factor) needs at least one entry");
  }
  if (config.grid_seeds.empty()) throw UsageError("grid.seeds: at least one seed is required");
  if (config.model.head.kind != nn::HeadKind::laya) throw ConfigError("head.kind: the grid searches laya heads");
  LoadedData data = load_data(config);
  GridOutcome outcome;
  outcome.out_dir = resolve_output_dir(config, options.out_dir, "grid");
  ensure_dir(outcome.out_dir);

  const auto points = train::enumerate_grid(g, config.model.head, config.train);
  outcome.result = train::grid_search(points, config.model.backbone, config.grid_seeds, data.source(),
                                      options.parallel.value_or(config.grid_seeds.size()),
                                      make_hooks(options.quiet));
  const auto& entries = outcome.result.entries;

  std::string board = "rank,d_star,tau,psi,scorer_width,mean_val_accuracy,std_val_accuracy,val_accuracies\n";
  std::size_t rank = 0;
  for (std::size_t idx : outcome.result.ranking()) {
    const auto& e = entries[idx];
    const auto& h = e.point.head;
    board += std::to_string(++rank) + "," + std::to_string(h.d_star) + "," + io::format_double(h.tau) + "," +
             nn::to_string(h.psi) + "," + std::to_string(h.scorer_width) + "," +
             io::format_double(e.val_accuracy.mean) + "," + io::format_double(e.val_accuracy.std) + "," +
             join_doubles(e.val_accuracies) + "\n";
  }

  const auto& best = entries[outcome.result.best].point.head;
  Json best_doc = config.resolved;
  best_doc["head"]["kind"] = "laya";
  best_doc["head"]["d_star"] = best.d_star;
  best_doc["head"]["tau"] = best.tau;
  best_doc["head"]["psi"] = nn::to_string(best.psi);
  best_doc["head"]["scorer_width"] = best.scorer_width;

  Json grid;
  grid["format"] = "laya-grid/1";
  grid["config_sha256"] = config.hash();
  grid["seeds"] = config.grid_seeds;
  grid["best"] = outcome.result.best;
  Json rows = Json::array();
  for (const auto& e : entries) {
    rows.push_back(Json{{"head", head_json(e.point.head)},
                        {"val_accuracies", e.val_accuracies},
                        {"val_accuracy", summary_json(e.val_accuracy)}});
  }
  grid["entries"] = rows;

  io::write_text(join_path(outcome.out_dir, "best_config.json"), io::dump_json(best_doc) + "\n");
  io::write_text(join_path(outcome.out_dir, "grid.json"), io::dump_json(grid) + "\n");
  io::write_text(join_path(outcome.out_dir, "leaderboard.csv"), board);
  return outcome;
}

std::vector<std::string> cmd_analyze(const std::string& report_dir, const std::string& out_dir) {
  const std::string config_path = join_path(report_dir, "config.json");
  const std::string params_path = join_path(report_dir, "params.bin");
  if (!fs::exists(config_path)) throw UsageError(report_dir + " is not a run directory (no config.json)");
  if (!fs::exists(params_path)) throw UsageError("missing parameter dump " + params_path);
  RunConfig config = parse_run_config(io::parse_json_file(config_path));
  if (!has_attention(config.model.head.kind)) throw UsageError("head emits no attention");

  std::uint64_t seed = config.train.seeds.empty() ? 0 : config.train.seeds.front();
  if (const std::string report_path = join_path(report_dir, "report.json"); fs::exists(report_path)) {
    const Json report = io::parse_json_file(report_path);
    if (report.contains("attention") && report["attention"].is_object()) {
      seed = report["attention"]["source_seed"].get<std::uint64_t>();
    }
  }

  LoadedData data = load_data(config);
  nn::Model model(config.model, seed);
  restore_named(model, io::read_parameters(params_path), params_path);
  const auto view = data.source().for_seed(seed, config.train.val_fraction).test;
  const auto ev = train::evaluate(model, view, config.train.eval_batch_size);

  const std::string dest = out_dir.empty() ? report_dir : out_dir;
  ensure_dir(dest);
  analysis::AttentionExport ex{ev.alpha, ev.labels, ev.predictions, config.model.head.num_classes,
                               config.dump_samples};
  return analysis::export_report(dest, ex, config.canonical_text());
}

std::vector<std::string> cmd_gen_synthetic(const std::string& out_dir, const SyntheticOptions& options) {
  ensure_dir(out_dir);
  if (options.kind == "lff") {
    const auto set = data::generate_synthetic_lff(options.lff);
    data::write_frozen_features(join_path(out_dir, "synthetic.lff"), set);
    data::write_split_manifest(join_path(out_dir, "split.json"),
                               data::stratified_split(set.labels, set.num_classes, 0.8, 0.1, options.lff.seed));
    return {"synthetic.lff", "split.json"};
  }
  if (options.kind == "text") {
    const auto all = data::generate_synthetic_corpus(options.text_train + options.text_test, options.lff.seed);
    const auto cut = static_cast<std::ptrdiff_t>(options.text_train);
    data::TextCorpus train{{all.texts.begin(), all.texts.begin() + cut}, {all.labels.begin(), all.labels.begin() + cut}};
    data::TextCorpus test{{all.texts.begin() + cut, all.texts.end()}, {all.labels.begin() + cut, all.labels.end()}};
    data::write_corpus_tsv(join_path(out_dir, "train.tsv"), train);
    data::write_corpus_tsv(join_path(out_dir, "test.tsv"), test);
    return {"train.tsv", "test.tsv"};
  }
  throw UsageError("gen-synthetic: unknown kind '" + options.kind + "' (expected lff or text)");
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  const auto t = io::parse_csv(io::read_text(path), path);
  std::vector<MetricsRow> out;
  for (const auto& r : t.rows) {
    MetricsRow m;
    m.seed = static_cast<std::uint64_t>(io::parse_csv_int(r[t.column("seed")], path));
    m.epochs_run = static_cast<std::size_t>(io::parse_csv_int(r[t.column("epochs_run")], path));
    m.best_epoch = static_cast<std::size_t>(io::parse_csv_int(r[t.column("best_epoch")], path));
    m.best_val_accuracy = io::parse_csv_double(r[t.column("best_val_accuracy")], path);
    m.test_accuracy = io::parse_csv_double(r[t.column("test_accuracy")], path);
    m.test_macro_f1 = io::parse_csv_double(r[t.column("test_macro_f1")], path);
    m.test_loss = io::parse_csv_double(r[t.column("test_loss")], path);
    out.push_back(m);
  }
  return out;
}

std::vector<LeaderboardRow> read_leaderboard_csv(const std::string& path) {
  const auto t = io::parse_csv(io::read_text(path), path);
  std::vector<LeaderboardRow> out;
  for (const auto& r : t.rows) {
    LeaderboardRow row;
    row.rank = static_cast<std::size_t>(io::parse_csv_int(r[t.column("rank")], path));
    row.head.kind = nn::HeadKind::laya;
    row.head.d_star = static_cast<std::size_t>(io::parse_csv_int(r[t.column("d_star")], path));
    row.head.tau = io::parse_csv_double(r[t.column("tau")], path);
    row.head.psi = nn::parse_psi_kind(r[t.column("psi")]);
    row.head.scorer_width = static_cast<std::size_t>(io::parse_csv_int(r[t.column("scorer_width")], path));
    row.mean_val_accuracy = io::parse_csv_double(r[t.column("mean_val_accuracy")], path);
    row.std_val_accuracy = io::parse_csv_double(r[t.column("std_val_accuracy")], path);
    const std::string& list = r[t.column("val_accuracies")];
    std::size_t start = 0;
    while (start <= list.size() && !list.empty()) {
      const std::size_t semi = list.find(';', start);
      row.val_accuracies.push_back(io::parse_csv_double(list.substr(start, semi - start), path));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace laya::cli
