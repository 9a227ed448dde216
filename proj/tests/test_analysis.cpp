#include <doctest.h>

#include <cmath>

#include "laya/analysis/attention.hpp"
#include "laya/error.hpp"
#include "laya/io/binary.hpp"
#include "laya/io/json.hpp"
#include "laya/random.hpp"
#include "support/tempdir.hpp"

using namespace laya;
using analysis::Stratum;

namespace {

struct Sample {
  Tensor alpha;
  std::vector<int> labels, predictions;
};

Sample random_sample(Rng& rng, std::size_t n, std::size_t L, std::size_t C) {
  Sample s{Tensor({n, L}), {}, {}};
  for (std::size_t r = 0; r < n; ++r) {
    double total = 0.0;
    for (std::size_t i = 0; i < L; ++i) total += s.alpha.at(r, i) = rng.uniform() + 1e-3;
    for (std::size_t i = 0; i < L; ++i) s.alpha.at(r, i) /= total;
    s.labels.push_back(static_cast<int>(rng.below(C)));
    s.predictions.push_back(rng.below(3) == 0 ? static_cast<int>(rng.below(C)) : s.labels.back());
  }
  return s;
}

void check_row(const std::optional<std::vector<double>>& row, std::vector<double> want) {
  REQUIRE(row.has_value());
  REQUIRE(row->size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK((*row)[i] == doctest::Approx(want[i]));
}

}  // namespace

TEST_CASE("global attention statistics") {
  SUBCASE("uniform rows") {
    const auto s = analysis::global_stats(Tensor({4, 3}, 1.0 / 3.0));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s.mean[i] == doctest::Approx(1.0 / 3.0));
      CHECK(s.std[i] == doctest::Approx(0.0));
    }
    CHECK(s.count == 4);
  }
  SUBCASE("[1,0] and [0,1]: n - 1 denominator") {
    const auto s = analysis::global_stats(Tensor::matrix({{1, 0}, {0, 1}}));
    CHECK(s.mean == std::vector<double>{0.5, 0.5});
    CHECK(s.std[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(s.std[1] == doctest::Approx(std::sqrt(0.5)));
  }
  SUBCASE("single sample has zero spread") {
    const auto s = analysis::global_stats(Tensor::matrix({{0.2, 0.8}}));
    CHECK(s.std == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(analysis::global_stats(Tensor({0, 3})), ParameterError); }
  SUBCASE("means of simplex rows sum to one") {
    Rng rng(1);
    const auto s = random_sample(rng, 50, 4, 3);
    const auto g = analysis::global_stats(s.alpha);
    double total = 0.0;
    for (double m : g.mean) total += m;
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("class-wise profiles") {
  SUBCASE("three-sample hand case") {
    const Tensor alpha = Tensor::matrix({{1, 0}, {0, 1}, {0.5, 0.5}});
    const auto p = analysis::classwise_profiles(alpha, {0, 0, 1}, {0, 1, 1}, 2);
    check_row(p.row(Stratum::all, 0), {0.5, 0.5});
    check_row(p.row(Stratum::correct, 0), {1, 0});
    check_row(p.row(Stratum::incorrect, 0), {0, 1});
    check_row(p.row(Stratum::all, 1), {0.5, 0.5});
    check_row(p.row(Stratum::correct, 1), {0.5, 0.5});
    CHECK_FALSE(p.row(Stratum::incorrect, 1).has_value());
    CHECK(p.count_of(Stratum::incorrect, 1) == 0);
    CHECK(p.count_of(Stratum::all, 0) == 2);
  }
  SUBCASE("all correct: the incorrect stratum is empty and correct equals all") {
    Rng rng(2);
    auto s = random_sample(rng, 30, 3, 4);
    s.predictions = s.labels;
    const auto p = analysis::classwise_profiles(s.alpha, s.labels, s.predictions, 4);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(p.count_of(Stratum::incorrect, c) == 0);
      CHECK_FALSE(p.row(Stratum::incorrect, c).has_value());
      CHECK(p.row(Stratum::all, c) == p.row(Stratum::correct, c));
    }
  }
  SUBCASE("sample order does not matter") {
    Rng rng(3);
    const auto s = random_sample(rng, 40, 3, 3);
    Sample r{Tensor({40, 3}), {}, {}};
    for (std::size_t k = 0; k < 40; ++k) {
      const std::size_t from = (k * 17) % 40;
      for (std::size_t i = 0; i < 3; ++i) r.alpha.at(k, i) = s.alpha.at(from, i);
      r.labels.push_back(s.labels[from]);
      r.predictions.push_back(s.predictions[from]);
    }
    const auto a = analysis::classwise_profiles(s.alpha, s.labels, s.predictions, 3);
    const auto b = analysis::classwise_profiles(r.alpha, r.labels, r.predictions, 3);
    for (Stratum st : analysis::kStrata) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(a.count_of(st, c) == b.count_of(st, c));
        if (!a.row(st, c)) continue;
        for (std::size_t i = 0; i < 3; ++i) CHECK((*a.row(st, c))[i] == doctest::Approx((*b.row(st, c))[i]));
      }
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(analysis::classwise_profiles(Tensor({2, 2}, 0.5), {0, 1}, {0}, 2), ContractError);
  }
  SUBCASE("invariants on random data") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t C = 2 + rng.below(4), L = 1 + rng.below(4), n = 1 + rng.below(60);
      const auto s = random_sample(rng, n, L, C);
      const auto p = analysis::classwise_profiles(s.alpha, s.labels, s.predictions, C);
      CHECK(analysis::strata_partition(p, n));
      CHECK(analysis::recombination_error(p) <= 1e-9);
      for (Stratum st : analysis::kStrata) {
        for (std::size_t c = 0; c < C; ++c) {
          CHECK(p.row(st, c).has_value() == (p.count_of(st, c) > 0));
          if (!p.row(st, c)) continue;
          double total = 0.0;
          for (double v : *p.row(st, c)) total += v;
          CHECK(std::abs(total - 1.0) <= 1e-6);
        }
      }
      // global means are the count-weighted all-stratum means
      const auto g = analysis::global_stats(s.alpha);
      for (std::size_t i = 0; i < L; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          if (p.row(Stratum::all, c)) acc += static_cast<double>(p.count_of(Stratum::all, c)) * (*p.row(Stratum::all, c))[i];
        }
        CHECK(std::abs(acc / static_cast<double>(n) - g.mean[i]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("attention exports") {
  Rng rng(5);
  const auto s = random_sample(rng, 25, 3, 4);

  SUBCASE("global CSV round-trips") {
    const auto g = analysis::global_stats(s.alpha);
    const auto back = analysis::parse_global_csv(analysis::global_csv(g));
    REQUIRE(back.mean.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(back.mean[i] - g.mean[i]) <= 1e-12);
      CHECK(std::abs(back.std[i] - g.std[i]) <= 1e-12);
    }
  }
  SUBCASE("class-wise CSV round-trips, empty strata keep empty fields") {
    auto labels = s.labels;
    auto preds = labels;
    const auto p = analysis::classwise_profiles(s.alpha, labels, preds, 5);
    const std::string csv = analysis::classwise_csv(p);
    CHECK(csv.find("incorrect,0,1,,") != std::string::npos);
    const auto back = analysis::parse_classwise_csv(csv);
    CHECK(back.num_classes == 5);
    CHECK(back.layers == 3);
    for (Stratum st : analysis::kStrata) {
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(back.count_of(st, c) == p.count_of(st, c));
        REQUIRE(back.row(st, c).has_value() == p.row(st, c).has_value());
        if (!p.row(st, c)) continue;
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs((*back.row(st, c))[i] - (*p.row(st, c))[i]) <= 1e-12);
      }
    }
  }
  SUBCASE("report files and a manifest tied to the config hash") {
    laya::testing::TempDir dir;
    const analysis::AttentionExport ex{s.alpha, s.labels, s.predictions, 4, true};
    const auto files = analysis::export_report(dir.file("a"), ex, "{\"x\":1}");
    CHECK(files == std::vector<std::string>{"attn_global.csv", "attn_classwise.csv", "attn_samples.csv",
                                            "attn_manifest.json"});
    const auto manifest = io::parse_json_file(dir.file("a/attn_manifest.json"));
    CHECK(manifest["config_sha256"] == io::sha256_hex("{\"x\":1}"));
    analysis::export_report(dir.file("b"), ex, "{\"x\":2}");
    CHECK(io::parse_json_file(dir.file("b/attn_manifest.json"))["config_sha256"] != manifest["config_sha256"]);
    CHECK(io::read_text(dir.file("a/attn_global.csv")) == io::read_text(dir.file("b/attn_global.csv")));
    const std::string samples = io::read_text(dir.file("a/attn_samples.csv"));
    CHECK(samples.rfind("sample,label,prediction,alpha_1,alpha_2,alpha_3\n", 0) == 0);
  }
  SUBCASE("an unwritable destination is an io error") {
    laya::testing::TempDir dir;
    io::write_text(dir.file("file"), "x");
    const analysis::AttentionExport ex{s.alpha, s.labels, s.predictions, 4, false};
    CHECK_THROWS_AS(analysis::export_report(dir.file("file/sub"), ex, "{}"), IoError);
  }
}

TEST_CASE("sha256") {
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
