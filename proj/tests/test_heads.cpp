#include <doctest.h>

#include <cmath>

#include "laya/error.hpp"
#include "laya/nn/heads.hpp"
#include "support/head_checks.hpp"

using namespace laya;
using namespace laya::testing;
using nn::Head;
using nn::HeadConfig;
using nn::HeadKind;

namespace {

HeadConfig config_of(HeadKind kind, std::size_t d, std::size_t C) {
  HeadConfig c;
  c.kind = kind;
  c.d_star = d;
  c.num_classes = C;
  c.scorer_width = 1;
  return c;
}

void set_identity(nn::Dense& dense) {
  Tensor& w = dense.weight->value;
  w.fill(0.0);
  for (std::size_t i = 0; i < std::min(w.rows(), w.cols()); ++i) w.at(i, i) = 1.0;
  dense.bias->value.fill(0.0);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Plain-loop x * W + b for one row.
std::vector<double> affine(const std::vector<double>& x, const nn::Dense& dense) {
  const Tensor& w = dense.weight->value;
  std::vector<double> y(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    y[j] = dense.bias->value[j];
    for (std::size_t i = 0; i < w.rows(); ++i) y[j] += x[i] * w.at(i, j);
  }
  return y;
}

std::vector<double> row_of(const Tensor& t, std::size_t r) {
  return {t.data() + r * t.cols(), t.data() + (r + 1) * t.cols()};
}

}  // namespace

TEST_CASE("last_layer head") {
  Rng rng(3);
  const std::vector<std::size_t> dims{3, 4};
  const std::vector<Tensor> states{random_tensor(rng, {2, 3}), random_tensor(rng, {2, 4})};

  SUBCASE("identity classifier returns the deepest state") {
    Head head(config_of(HeadKind::last_layer, 1, 4), dims, rng);
    set_identity(head.layers().classifier);
    CHECK(run_head(head, states).logits == states[1]);
  }
  SUBCASE("early layers are ignored and the product matches a hand matmul") {
    Head head(config_of(HeadKind::last_layer, 1, 3), dims, rng);
    perturb_parameters(head.params(), rng);
    const Tensor logits = run_head(head, states).logits;
    std::vector<Tensor> perturbed = states;
    perturbed[0] = random_tensor(rng, {2, 3});
    CHECK(run_head(head, perturbed).logits == logits);
    double worst = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
      const auto y = affine(row_of(states[1], r), head.layers().classifier);
      for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(y[c] - logits.at(r, c)));
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("classifier width must match the deepest state") {
    Head head(config_of(HeadKind::last_layer, 1, 3), {3, 5}, rng);
    CHECK_THROWS_AS(run_head(head, states), DimensionError);
  }
}

TEST_CASE("concat head") {
  Rng rng(5);
  SUBCASE("single layer equals adapter -> dense -> gelu -> classifier") {
    const std::vector<Tensor> states{random_tensor(rng, {3, 4})};
    Head head(config_of(HeadKind::concat, 3, 2), {4}, rng);
    perturb_parameters(head.params(), rng);
    const Tensor logits = run_head(head, states).logits;
    const auto& ly = head.layers();
    double worst = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      auto h = affine(affine(row_of(states[0], r), ly.adapters[0]), ly.concat_post);
      for (double& v : h) v = gelu(v);
      const auto y = affine(h, ly.classifier);
      for (std::size_t c = 0; c < 2; ++c) worst = std::max(worst, std::abs(y[c] - logits.at(r, c)));
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("duplicated row yields a duplicated logit row") {
    Tensor a = random_tensor(rng, {1, 2}), b = random_tensor(rng, {1, 3});
    Tensor a2({2, 2}), b2({2, 3});
    for (std::size_t k = 0; k < 2; ++k) a2[k] = a2[2 + k] = a[k];
    for (std::size_t k = 0; k < 3; ++k) b2[k] = b2[3 + k] = b[k];
    Head head(config_of(HeadKind::concat, 2, 3), {2, 3}, rng);
    perturb_parameters(head.params(), rng);
    const Tensor single = run_head(head, {a, b}).logits;
    const Tensor doubled = run_head(head, {a2, b2}).logits;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(doubled.at(0, c) == single.at(0, c));
      CHECK(doubled.at(1, c) == single.at(0, c));
    }
  }
  SUBCASE("random case matches a loop re-implementation") {
    const std::vector<std::size_t> dims{3, 2, 4};
    std::vector<Tensor> states;
    for (std::size_t d : dims) states.push_back(random_tensor(rng, {4, d}));
    Head head(config_of(HeadKind::concat, 3, 5), dims, rng);
    perturb_parameters(head.params(), rng);
    const Tensor logits = run_head(head, states).logits;
    const auto& ly = head.layers();
    double worst = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      std::vector<double> cat;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto z = affine(row_of(states[i], r), ly.adapters[i]);
        cat.insert(cat.end(), z.begin(), z.end());
      }
      auto h = affine(cat, ly.concat_post);
      for (double& v : h) v = gelu(v);
      const auto y = affine(h, ly.classifier);
      for (std::size_t c = 0; c < 5; ++c) worst = std::max(worst, std::abs(y[c] - logits.at(r, c)));
    }
    CHECK(worst <= 1e-10);
  }
  SUBCASE("adapter count must match the number of states") {
    Head head(config_of(HeadKind::concat, 2, 2), {2, 2}, rng);
    CHECK_THROWS_AS(run_head(head, {random_tensor(rng, {1, 2})}), ConfigError);
  }
}

TEST_CASE("scalar_mix head") {
  Rng rng(7);
  const std::vector<std::size_t> dims{2, 2};
  SUBCASE("zero logits give uniform weights, constant across rows") {
    Head head(config_of(HeadKind::scalar_mix, 2, 2), dims, rng);
    const auto e = run_head(head, {random_tensor(rng, {5, 2}), random_tensor(rng, {5, 2})});
    REQUIRE(e.alpha.shape() == Shape{5, 2});
    for (double a : e.alpha.values()) CHECK(a == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(max_row_spread(e.alpha) == 0.0);
  }
  SUBCASE("s = [ln 1, ln 3] gives [0.25, 0.75] and the hand mixture") {
    Head head(config_of(HeadKind::scalar_mix, 2, 2), dims, rng);
    head.layers().mix_logits->value = Tensor::vector({std::log(1.0), std::log(3.0)});
    for (auto& a : head.layers().adapters) set_identity(a);
    const Tensor h1 = Tensor::matrix({{1, 2}}), h2 = Tensor::matrix({{4, -8}});
    const auto e = run_head(head, {h1, h2});
    CHECK(std::abs(e.alpha[0] - 0.25) <= 1e-12);
    CHECK(std::abs(e.alpha[1] - 0.75) <= 1e-12);
    CHECK(std::abs(e.h_agg[0] - (0.25 * 1 + 0.75 * 4)) <= 1e-12);
    CHECK(std::abs(e.h_agg[1] - (0.25 * 2 - 0.75 * 8)) <= 1e-12);
  }
  SUBCASE("weights stay batch-constant after training-like perturbation") {
    Head head(config_of(HeadKind::scalar_mix, 3, 4), {3, 5, 2}, rng);
    perturb_parameters(head.params(), rng, 2.0);
    const auto e = run_head(head, {random_tensor(rng, {6, 3}), random_tensor(rng, {6, 5}),
                                   random_tensor(rng, {6, 2})});
    CHECK(max_row_spread(e.alpha) == 0.0);
    CHECK(simplex_violation(e.alpha) <= 1e-9);
  }
}

TEST_CASE("laya head") {
  Rng rng(9);
  SUBCASE("hand trace with L=2, d*=2, batch 1") {
    HeadConfig c = config_of(HeadKind::laya, 2, 2);
    c.scorer_width = 1;
    Head head(c, {2, 2}, rng);
    auto& ly = head.layers();
    for (auto& a : ly.adapters) set_identity(a);
    ly.scorer_hidden.weight->value = Tensor::matrix({{1}, {0}, {0}, {0}});
    ly.scorer_hidden.bias->value.fill(0.0);
    ly.scorer_out.weight->value = Tensor::matrix({{1, -1}});
    ly.scorer_out.bias->value.fill(0.0);
    set_identity(ly.classifier);
    ly.classifier.bias->value = Tensor::vector({0.5, -0.5});
    const auto e = run_head(head, {Tensor::matrix({{1, 0}}), Tensor::matrix({{0, 1}})});
    // s = [g, -g] with g = gelu(1); alpha_1 = 1 / (1 + exp(-2g))
    const double g = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
    const double a1 = 1.0 / (1.0 + std::exp(-2.0 * g));
    CHECK(std::abs(e.alpha[0] - a1) <= 1e-10);
    CHECK(std::abs(e.alpha[1] - (1.0 - a1)) <= 1e-10);
    CHECK(std::abs(e.logits[0] - (a1 + 0.5)) <= 1e-10);
    CHECK(std::abs(e.logits[1] - (1.0 - a1 - 0.5)) <= 1e-10);
  }
  SUBCASE("single layer reduces to classifier after adapter") {
    for (int t = 0; t < 10; ++t) {
      const HeadCase c = random_head_case(rng, HeadKind::laya);
      CHECK(single_layer_equivalence_error(c, 100 + t) <= 1e-12);
    }
  }
  SUBCASE("attention depends on the input") {
    HeadConfig c = config_of(HeadKind::laya, 4, 3);
    c.scorer_width = 8;
    Head head(c, {5, 6, 7}, rng);
    const auto e = run_head(head, {random_tensor(rng, {8, 5}), random_tensor(rng, {8, 6}),
                                   random_tensor(rng, {8, 7})});
    CHECK(simplex_violation(e.alpha) <= 1e-9);
    CHECK(max_row_spread(e.alpha) > 0.0);
  }
  SUBCASE("smaller temperature sharpens the profile") {
    HeadConfig c = config_of(HeadKind::laya, 3, 2);
    c.scorer_width = 4;
    Head head(c, {3, 3, 3}, rng);
    perturb_parameters(head.params(), rng);
    const std::vector<Tensor> states{random_tensor(rng, {4, 3}), random_tensor(rng, {4, 3}),
                                     random_tensor(rng, {4, 3})};
    const Tensor warm = run_head(head, states).alpha;
    head.set_tau(0.05);
    const Tensor cold = run_head(head, states).alpha;
    for (std::size_t r = 0; r < 4; ++r) {
      const auto w = row_of(warm, r), k = row_of(cold, r);
      CHECK(*std::max_element(k.begin(), k.end()) >= *std::max_element(w.begin(), w.end()));
    }
  }
  SUBCASE("layer permutation equivariance") {
    for (int t = 0; t < 10; ++t) {
      const HeadCase c = random_head_case(rng, HeadKind::laya, 2);
      const std::size_t a = rng.below(c.dims.size());
      const std::size_t b = (a + 1 + rng.below(c.dims.size() - 1)) % c.dims.size();
      CHECK(permutation_equivariance_error(c, a, b, 200 + t) <= 1e-12);
    }
  }
  SUBCASE("non-positive temperature is a parameter error") {
    HeadConfig c = config_of(HeadKind::laya, 2, 2);
    c.tau = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.tau = -1.0;
    CHECK_THROWS_AS(Head(c, {2}, rng), ParameterError);
    Head head(config_of(HeadKind::laya, 2, 2), {2}, rng);
    CHECK_THROWS_AS(head.set_tau(0.0), ParameterError);
  }
  SUBCASE("adapter width mismatch is a config error") {
    Head head(config_of(HeadKind::laya, 2, 2), {2, 3}, rng);
    CHECK_THROWS_AS(run_head(head, {random_tensor(rng, {1, 2}), random_tensor(rng, {1, 4})}),
                    ConfigError);
  }
}

TEST_CASE("every head passes the finite-difference check") {
  Rng rng(21);
  for (HeadKind kind : {HeadKind::last_layer, HeadKind::concat, HeadKind::scalar_mix, HeadKind::laya}) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) worst = std::max(worst, head_grad_error(random_head_case(rng, kind), 300 + t));
    INFO(nn::to_string(kind));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("full laya head on two-layer states matches finite differences") {
  Rng rng(22);
  HeadCase c = random_head_case(rng, HeadKind::laya, 2);
  c.dims.resize(2);
  c.states.resize(2);
  c.config.psi = nn::PsiKind::mlp;
  CHECK(head_grad_error(c, 17) <= 1e-4);
}

TEST_CASE("parameter counts") {
  SUBCASE("Fashion-MNIST laya configuration") {
    HeadConfig c = config_of(HeadKind::laya, 96, 10);
    c.scorer_width = 192;
    const std::vector<std::size_t> dims{512, 256, 128};
    CHECK(nn::count_parameters(c, dims) == 143341);
    CHECK(parameter_count_gap(c, dims) == 0);
  }
  SUBCASE("all-ones case") {
    HeadConfig c = config_of(HeadKind::laya, 1, 1);
    CHECK(nn::count_parameters(c, {1}) == 8);
    CHECK(parameter_count_gap(c, {1}) == 0);
  }
  SUBCASE("scalar mix adds exactly L") {
    const std::vector<std::size_t> dims{7, 5, 3, 2};
    const HeadConfig mix = config_of(HeadKind::scalar_mix, 4, 3);
    std::size_t base = 0;
    for (std::size_t d : dims) base += d * 4 + 4;
    base += 4 * 3 + 3;
    CHECK(nn::count_parameters(mix, dims) == base + dims.size());
  }
  SUBCASE("randomised sweep over every kind") {
    Rng rng(33);
    for (int t = 0; t < 200; ++t) {
      HeadConfig c = config_of(static_cast<HeadKind>(rng.below(4)), 1 + rng.below(16), 1 + rng.below(12));
      c.scorer_width = 1 + rng.below(20);
      c.psi = rng.below(2) ? nn::PsiKind::mlp : nn::PsiKind::identity;
      std::vector<std::size_t> dims(1 + rng.below(6));
      for (auto& d : dims) d = 1 + rng.below(40);
      CHECK(parameter_count_gap(c, dims) == 0);
    }
  }
}
