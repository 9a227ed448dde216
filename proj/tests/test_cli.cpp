#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "laya/cli/commands.hpp"
#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/random.hpp"
#include "support/tempdir.hpp"

using namespace laya;
using laya::testing::TempDir;
namespace fs = std::filesystem;

namespace {

cli::CommandOptions quiet_to(const std::string& dir) {
  cli::CommandOptions o;
  o.out_dir = dir;
  o.quiet = true;
  return o;
}

std::string synthetic_lff(TempDir& dir, data::SyntheticLffSpec spec = {}) {
  cli::SyntheticOptions opts;
  opts.lff = spec;
  cli::cmd_gen_synthetic(dir.file("syn"), opts);
  return dir.file("syn");
}

io::Json without_timing(const std::string& path) {
  io::Json j = io::parse_json_file(path);
  j.erase("timing");
  return j;
}

const std::vector<std::string> kFastFrozen{"train.seeds=[1,2]", "train.max_epochs=6", "train.patience=3",
                                           "head.d_star=8", "head.scorer_width=16"};

}  // namespace

TEST_CASE("config documents") {
  SUBCASE("defaults parse") {
    const auto c = cli::parse_run_config(cli::default_config());
    CHECK(c.model.head.d_star == 96);
    CHECK(c.train.seeds.size() == 5);
    CHECK(c.train.learning_rate == doctest::Approx(1e-3));
    CHECK(c.grid_seeds == std::vector<std::uint64_t>{101, 102, 103});
  }
  SUBCASE("the cnn default learning rate") {
    io::Json doc = cli::default_config();
    doc["dataset"]["kind"] = "cifar10";
    doc["backbone"]["kind"] = "cnn";
    CHECK(cli::parse_run_config(doc).train.learning_rate == doctest::Approx(3e-4));
  }
  SUBCASE("unknown keys name their path") {
    io::Json doc = cli::default_config();
    try {
      cli::merge_config(doc, io::Json{{"train", {{"lr", 0.1}}}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.lr") != std::string::npos);
    }
  }
  SUBCASE("overrides") {
    io::Json doc = cli::default_config();
    cli::apply_override(doc, "train.seeds=[7]");
    cli::apply_override(doc, "head.psi=mlp");
    const auto c = cli::parse_run_config(doc);
    CHECK(c.train.seeds == std::vector<std::uint64_t>{7});
    CHECK(c.model.head.psi == nn::PsiKind::mlp);
    CHECK_THROWS_AS(cli::apply_override(doc, "train.nope=1"), UsageError);
    CHECK_THROWS_AS(cli::apply_override(doc, "no_equals_sign"), UsageError);
  }
  SUBCASE("bad values") {
    io::Json doc = cli::default_config();
    doc["head"]["tau"] = -1.0;
    CHECK_THROWS_AS(cli::parse_run_config(doc), Error);
    doc = cli::default_config();
    doc["train"]["batch_size"] = "big";
    CHECK_THROWS_AS(cli::parse_run_config(doc), ConfigError);
    doc = cli::default_config();
    doc["dataset"]["kind"] = "text";
    CHECK_THROWS_AS(cli::parse_run_config(doc), ConfigError);
  }
  SUBCASE("environment expansion") {
    ::setenv("LAYA_TEST_DIR", "/data/x", 1);
    CHECK(cli::expand_env("${LAYA_TEST_DIR}/a") == "/data/x/a");
    CHECK(cli::expand_env("${LAYA_TEST_UNSET_VAR:-/fallback}/b") == "/fallback/b");
    CHECK(cli::expand_env("plain") == "plain");
    ::unsetenv("LAYA_TEST_DIR");
  }
  SUBCASE("the hash follows content, not key order") {
    io::Json a = cli::default_config();
    io::Json b = cli::default_config();
    b.erase("train");
    b["train"] = a["train"];
    CHECK(cli::parse_run_config(a).hash() == cli::parse_run_config(b).hash());
    cli::apply_override(b, "train.patience=6");
    CHECK(cli::parse_run_config(a).hash() != cli::parse_run_config(b).hash());
    CHECK(cli::parse_run_config(a).hash().size() == 64);
  }
  SUBCASE("missing dataset files are found when loading") {
    io::Json doc = cli::default_config();
    doc["dataset"]["path"] = "/nonexistent/laya";
    auto c = cli::parse_run_config(doc);
    CHECK_THROWS_AS(cli::load_data(c), ConfigError);
    c.dataset.path.clear();
    CHECK_THROWS_AS(cli::load_data(c), ConfigError);
  }
  SUBCASE("config files") {
    TempDir dir;
    io::write_text(dir.file("c.json"), R"({"head": {"kind": "last_layer"}, "train": {"seeds": [3]}})");
    const auto c = cli::load_run_config(dir.file("c.json"), {"train.patience=2"});
    CHECK(c.model.head.kind == nn::HeadKind::last_layer);
    CHECK(c.train.seeds == std::vector<std::uint64_t>{3});
    CHECK(c.train.patience == 2);
    io::write_text(dir.file("bad.json"), "{not json");
    CHECK_THROWS_AS(cli::load_run_config(dir.file("bad.json"), {}), Error);
    CHECK_THROWS_AS(cli::load_run_config(dir.file("absent.json"), {}), Error);
  }
}

TEST_CASE("output directory") {
  auto c = cli::parse_run_config(cli::default_config());
  CHECK(cli::resolve_output_dir(c, "given", "train") == "given");
  ::setenv("LAYA_OUT", "/tmp/laya_out_test", 1);
  CHECK(cli::resolve_output_dir(c, "", "train") == "/tmp/laya_out_test/train-" + c.hash().substr(0, 12));
  ::unsetenv("LAYA_OUT");
  CHECK(cli::resolve_output_dir(c, "", "grid") == "runs/grid-" + c.hash().substr(0, 12));
  c.output = "mine";
  CHECK(cli::resolve_output_dir(c, "", "train") == "mine");
}

TEST_CASE("frozen-train end to end") {
  TempDir dir;
  data::SyntheticLffSpec spec;
  spec.n = 400;
  spec.dims = {6, 5, 7};
  spec.num_classes = 3;
  spec.informative_layer = 2;
  const std::string syn = synthetic_lff(dir, spec);

  auto config = cli::frozen_run_config(syn + "/synthetic.lff", syn + "/split.json", "", kFastFrozen);
  const auto out = cli::cmd_frozen_train(config, quiet_to(dir.file("a")));
  CHECK(out.report.seeds.size() == 2);

  for (const char* f : {"report.json", "metrics.csv", "config.json", "params.bin", "attn_global.csv",
                        "attn_classwise.csv", "attn_manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir.file(std::string("a/") + f)), f);
  }
  const auto rows = cli::read_metrics_csv(dir.file("a/metrics.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].seed == 1);
  CHECK(rows[1].test_accuracy == out.report.seeds[1].test.metrics.accuracy);

  const io::Json report = io::parse_json_file(dir.file("a/report.json"));
  CHECK(report["model"]["layer_dims"] == io::Json::array({6, 5, 7}));
  CHECK(report["dataset"]["num_classes"] == 3);
  CHECK(report["dataset"]["train_size"].get<std::size_t>() + report["dataset"]["val_size"].get<std::size_t>() +
            report["dataset"]["test_size"].get<std::size_t>() ==
        400);
  CHECK(report["attention"]["layers"] == 3);

  SUBCASE("a repeated run is byte-identical outside timing") {
    cli::cmd_frozen_train(config, quiet_to(dir.file("b")));
    CHECK(io::dump_json(without_timing(dir.file("a/report.json"))) ==
          io::dump_json(without_timing(dir.file("b/report.json"))));
    for (const char* f : {"metrics.csv", "config.json", "params.bin", "attn_global.csv", "attn_classwise.csv"}) {
      CHECK_MESSAGE(io::read_text(dir.file(std::string("a/") + f)) == io::read_text(dir.file(std::string("b/") + f)),
                    f);
    }
  }
  SUBCASE("parallel and serial seeds agree") {
    auto opts = quiet_to(dir.file("p"));
    opts.parallel = 1;
    cli::cmd_frozen_train(config, opts);
    CHECK(io::read_text(dir.file("a/metrics.csv")) == io::read_text(dir.file("p/metrics.csv")));
  }
  SUBCASE("analyze reproduces the attention files") {
    const auto files = cli::cmd_analyze(dir.file("a"), dir.file("re"));
    CHECK(std::find(files.begin(), files.end(), "attn_global.csv") != files.end());
    for (const char* f : {"attn_global.csv", "attn_classwise.csv", "attn_manifest.json"}) {
      CHECK_MESSAGE(io::read_text(dir.file(std::string("a/") + f)) == io::read_text(dir.file(std::string("re/") + f)),
                    f);
    }
  }
  SUBCASE("analyze on a directory without a run") {
    CHECK_THROWS_AS(cli::cmd_analyze(dir.file("syn")), UsageError);
  }
}

TEST_CASE("frozen-train edge cases") {
  TempDir dir;
  SUBCASE("last_layer writes no attention and analyze refuses it") {
    const std::string syn = synthetic_lff(dir);
    auto overrides = kFastFrozen;
    overrides.push_back("head.kind=last_layer");
    auto config = cli::frozen_run_config(syn + "/synthetic.lff", "", "", overrides);
    cli::cmd_frozen_train(config, quiet_to(dir.file("ll")));
    CHECK_FALSE(fs::exists(dir.file("ll/attn_global.csv")));
    CHECK(io::parse_json_file(dir.file("ll/report.json"))["attention"].is_null());
    try {
      cli::cmd_analyze(dir.file("ll"));
      FAIL("expected UsageError");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("head emits no attention") != std::string::npos);
    }
  }
  SUBCASE("one layer: attention is identically one") {
    data::SyntheticLffSpec spec;
    spec.n = 200;
    spec.dims = {4};
    const std::string syn = synthetic_lff(dir, spec);
    auto config = cli::frozen_run_config(syn + "/synthetic.lff", syn + "/split.json", "", kFastFrozen);
    const auto out = cli::cmd_frozen_train(config, quiet_to(dir.file("one")));
    const Tensor& alpha = out.report.seeds.front().test.alpha;
    REQUIRE(alpha.cols() == 1);
    for (std::size_t r = 0; r < alpha.rows(); ++r) CHECK(alpha.at(r, 0) == 1.0);
  }
  SUBCASE("an empty feature file") {
    data::FrozenFeatureSet empty;
    empty.dims = {3, 3};
    empty.num_classes = 2;
    data::write_frozen_features(dir.file("empty.lff"), empty);
    auto config = cli::frozen_run_config(dir.file("empty.lff"), "", "", kFastFrozen);
    CHECK_THROWS_AS(cli::cmd_frozen_train(config, quiet_to(dir.file("e"))), DataError);
  }
  SUBCASE("declared widths must match the file") {
    const std::string syn = synthetic_lff(dir);
    auto overrides = kFastFrozen;
    overrides.push_back("backbone.widths=[16,16]");
    auto config = cli::frozen_run_config(syn + "/synthetic.lff", "", "", overrides);
    CHECK_THROWS_AS(cli::cmd_frozen_train(config, quiet_to(dir.file("w"))), ConfigError);
  }
  SUBCASE("class count must match the file") {
    const std::string syn = synthetic_lff(dir);
    auto overrides = kFastFrozen;
    overrides.push_back("head.num_classes=5");
    auto config = cli::frozen_run_config(syn + "/synthetic.lff", "", "", overrides);
    CHECK_THROWS_AS(cli::cmd_frozen_train(config, quiet_to(dir.file("c"))), ConfigError);
  }
  SUBCASE("frozen-train wants an LFF dataset") {
    auto config = cli::parse_run_config(cli::default_config());
    CHECK_THROWS_AS(cli::cmd_frozen_train(config, quiet_to(dir.file("x"))), ConfigError);
  }
}

TEST_CASE("grid command") {
  TempDir dir;
  data::SyntheticLffSpec spec;
  spec.n = 300;
  spec.dims = {5, 5};
  const std::string syn = synthetic_lff(dir, spec);
  auto overrides = kFastFrozen;
  overrides.insert(overrides.end(), {"grid.d_star=[4,8]", "grid.tau=[1.0]", "grid.psi=[\"identity\"]",
                                     "grid.scorer_width_factor=[1]", "grid.seeds=[11,12]"});
  auto config = cli::frozen_run_config(syn + "/synthetic.lff", syn + "/split.json", "", overrides);
  const auto out = cli::cmd_grid(config, quiet_to(dir.file("g")));
  REQUIRE(out.result.entries.size() == 2);

  const auto board = cli::read_leaderboard_csv(dir.file("g/leaderboard.csv"));
  REQUIRE(board.size() == 2);
  CHECK(board[0].rank == 1);
  CHECK(board[0].mean_val_accuracy >= board[1].mean_val_accuracy);
  CHECK(board[0].head.d_star == out.result.entries[out.result.best].point.head.d_star);
  CHECK(board[0].val_accuracies.size() == 2);

  // the winning config trains as a normal run with the grid seeds
  auto best = cli::parse_run_config(io::parse_json_file(dir.file("g/best_config.json")));
  CHECK(best.model.head.d_star == board[0].head.d_star);
  best.train.seeds = {11, 12};
  const auto rerun = cli::cmd_frozen_train(best, quiet_to(dir.file("best")));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(rerun.report.seeds[k].best_val_accuracy == board[0].val_accuracies[k]);
  }

  SUBCASE("empty value lists") {
    auto c = config;
    c.grid.tau.clear();
    CHECK_THROWS_AS(cli::cmd_grid(c, quiet_to(dir.file("e"))), UsageError);
  }
  SUBCASE("only laya heads") {
    auto c = config;
    c.model.head.kind = nn::HeadKind::concat;
    CHECK_THROWS_AS(cli::cmd_grid(c, quiet_to(dir.file("e"))), ConfigError);
  }
}

TEST_CASE("gen-synthetic and small train runs") {
  TempDir dir;
  SUBCASE("lff output loads and its manifest partitions the samples") {
    data::SyntheticLffSpec spec;
    spec.n = 100;
    const std::string syn = synthetic_lff(dir, spec);
    const auto set = data::load_frozen_features(syn + "/synthetic.lff");
    CHECK(set.size() == 100);
    const auto m = data::load_split_manifest(syn + "/split.json", 100);
    CHECK(m.train.size() + m.val.size() + m.test.size() == 100);
    CHECK(std::abs(static_cast<double>(m.train.size()) - 80.0) <= 2.0);
  }
  SUBCASE("text files feed a text run") {
    cli::SyntheticOptions opts;
    opts.kind = "text";
    opts.text_train = 300;
    opts.text_test = 100;
    cli::cmd_gen_synthetic(dir.file("txt"), opts);
    io::Json doc = cli::default_config();
    doc["dataset"]["kind"] = "text";
    doc["dataset"]["train_path"] = dir.file("txt/train.tsv");
    doc["dataset"]["test_path"] = dir.file("txt/test.tsv");
    doc["dataset"]["vocab_size"] = 500;
    doc["dataset"]["seq_len"] = 32;
    doc["backbone"]["kind"] = "text";
    doc["backbone"]["embedding_dim"] = 16;
    doc["backbone"]["widths"] = io::Json::array({16, 16});
    doc["head"]["d_star"] = 8;
    doc["head"]["scorer_width"] = 8;
    doc["train"]["seeds"] = io::Json::array({1});
    doc["train"]["max_epochs"] = 2;
    const auto out = cli::cmd_train(cli::parse_run_config(doc), quiet_to(dir.file("t")));
    CHECK(fs::exists(dir.file("t/vocab.tsv")));
    CHECK(out.report.model.head.num_classes == 2);
    CHECK(out.report.seeds[0].test.labels.size() == 100);
  }
  SUBCASE("an idx directory feeds an mlp run") {
    Rng rng(3);
    fs::create_directories(dir.file("idx"));
    for (const char* split : {"train", "t10k"}) {
      const std::uint32_t n = 60;
      std::vector<std::uint8_t> images{0, 0, 8, 3, 0, 0, 0, n, 0, 0, 0, 4, 0, 0, 0, 4};
      std::vector<std::uint8_t> labels{0, 0, 8, 1, 0, 0, 0, n};
      for (std::uint32_t r = 0; r < n; ++r) {
        labels.push_back(static_cast<std::uint8_t>(r % 3));
        for (std::uint32_t k = 0; k < 16; ++k) {
          images.push_back(static_cast<std::uint8_t>(k % 3 == r % 3 ? 200 : rng.below(50)));
        }
      }
      io::write_file(dir.file(std::string("idx/") + split + "-images-idx3-ubyte"), images);
      io::write_file(dir.file(std::string("idx/") + split + "-labels-idx1-ubyte"), labels);
    }
    io::Json doc = cli::default_config();
    doc["dataset"]["path"] = dir.file("idx");
    doc["backbone"]["input_dim"] = 16;
    doc["backbone"]["widths"] = io::Json::array({12, 8});
    doc["head"]["d_star"] = 4;
    doc["head"]["scorer_width"] = 8;
    doc["train"]["seeds"] = io::Json::array({2});
    doc["train"]["max_epochs"] = 3;
    const auto out = cli::cmd_train(cli::parse_run_config(doc), quiet_to(dir.file("m")));
    CHECK(out.report.model.head.num_classes == 10);  // idx files carry no class count
    CHECK(out.report.seeds[0].test.alpha.cols() == 2);
    doc["backbone"]["input_dim"] = 15;
    CHECK_THROWS_AS(cli::cmd_train(cli::parse_run_config(doc), quiet_to(dir.file("m2"))), ConfigError);
  }
}
