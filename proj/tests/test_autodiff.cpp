#include <doctest.h>

#include <cmath>
#include <numbers>

#include "laya/autodiff/ops.hpp"
#include "laya/error.hpp"
#include "support/gradcheck.hpp"
#include "support/primitive_cases.hpp"

using namespace laya;
using laya::ad::Tape;
using laya::ad::Var;
using laya::testing::grad_check;
using laya::testing::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape tape;
  SUBCASE("identity") {
    Var eye = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    Var m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
    CHECK(ops::matmul(eye, m).value() == Tensor::matrix({{1, 2}, {3, 4}}));
  }
  SUBCASE("row times column") {
    Var a = tape.constant(Tensor::matrix({{1, 2}}));
    Var b = tape.constant(Tensor::matrix({{3}, {4}}));
    CHECK(ops::matmul(a, b).value() == Tensor::matrix({{11}}));
  }
  SUBCASE("shape mismatch names both shapes") {
    Var a = tape.constant(Tensor({2, 3}));
    Var b = tape.constant(Tensor({2, 3}));
    try {
      ops::matmul(a, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3] x [2x3]") != std::string::npos);
    }
  }
}

TEST_CASE("matmul gradient matches finite differences on 3x4 * 4x2") {
  Rng rng(11);
  const Tensor w = random_tensor(rng, {3, 2});
  auto f = [w](Tape&, const std::vector<Var>& v) {
    return testing::weighted_sum(ops::matmul(v[0], v[1]), w);
  };
  const auto r = grad_check(f, {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 2})});
  CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("layer_norm examples") {
  Tape tape;
  Var ones3 = tape.constant(Tensor::vector({1, 1, 1}));
  Var zeros3 = tape.constant(Tensor::vector({0, 0, 0}));
  Var constant_row = tape.constant(Tensor::matrix({{1, 1, 1}}));
  CHECK(ops::layer_norm(constant_row, ones3, zeros3).value() == Tensor::matrix({{0, 0, 0}}));

  Var two_point = tape.constant(Tensor::matrix({{0, 2}}));
  const Tensor y = ops::layer_norm(two_point, tape.constant(Tensor::vector({1, 1})),
                                   tape.constant(Tensor::vector({0, 0})))
                       .value();
  // variance 1, so x_hat = (x - 1) / sqrt(1 + eps)
  CHECK(y[0] == doctest::Approx(-1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
  CHECK(std::abs(y[0] + 1.0) < 1e-5);

  Var empty = tape.constant(Tensor({2, 0}));
  Var g0 = tape.constant(Tensor({0}));
  CHECK_THROWS_AS(ops::layer_norm(empty, g0, g0), DimensionError);
  CHECK_THROWS_AS(ops::layer_norm(constant_row, ones3, zeros3, 0.0), ParameterError);
}

TEST_CASE("layer_norm gradient on random 4x8") {
  Rng rng(12);
  const Tensor w = random_tensor(rng, {4, 8});
  auto f = [w](Tape&, const std::vector<Var>& v) {
    return testing::weighted_sum(ops::layer_norm(v[0], v[1], v[2]), w);
  };
  const auto r = grad_check(f, {random_tensor(rng, {4, 8}), random_tensor(rng, {8}, 0.5, 1.5),
                                random_tensor(rng, {8})});
  CHECK(r.max_rel_error <= 1e-5);
}

TEST_CASE("gelu examples and gradient grid") {
  Tape tape;
  const Tensor y = ops::gelu(tape.constant(Tensor::vector({0.0, 10.0, -10.0}))).value();
  CHECK(y[0] == 0.0);
  CHECK(std::abs(y[1] - 10.0) <= 1e-6);
  CHECK(std::abs(y[2]) <= 1e-6);

  Tensor grid({21});
  for (std::size_t i = 0; i < 21; ++i) grid[i] = -3.0 + 0.3 * static_cast<double>(i);
  Rng rng(13);
  const Tensor w = random_tensor(rng, {21});
  auto f = [w](Tape&, const std::vector<Var>& v) {
    return testing::weighted_sum(ops::gelu(v[0]), w);
  };
  CHECK(grad_check(f, {grid}).max_rel_error <= 1e-6);
}

TEST_CASE("softmax_temperature examples") {
  Tape tape;
  const Tensor uniform =
      ops::softmax_temperature(tape.constant(Tensor::matrix({{0, 0, 0}})), 1.0).value();
  for (double a : uniform.values()) CHECK(a == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Tensor base =
      ops::softmax_temperature(tape.constant(Tensor::matrix({{0.3, 1.3, -0.4, 2.0}})), 0.7).value();
  const Tensor shifted =
      ops::softmax_temperature(tape.constant(Tensor::matrix({{100.3, 101.3, 99.6, 102.0}})), 0.7)
          .value();
  CHECK(max_abs_diff(base, shifted) <= 1e-12);

  const Tensor pair = ops::softmax_temperature(tape.constant(Tensor::matrix({{1, 2}})), 0.5).value();
  const double e2 = std::exp(2.0);
  CHECK(std::abs(pair[0] - 1.0 / (1.0 + e2)) <= 1e-12);
  CHECK(std::abs(pair[1] - e2 / (1.0 + e2)) <= 1e-12);

  CHECK_THROWS_AS(ops::softmax_temperature(tape.constant(Tensor::matrix({{1, 2}})), 0.0),
                  ParameterError);
  CHECK_THROWS_AS(ops::softmax_temperature(tape.constant(Tensor::matrix({{1, 2}})), -1.0),
                  ParameterError);
}

TEST_CASE("softmax rows lie on the simplex and entropy grows with temperature") {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 1 + rng.below(6);
    const Tensor s = random_tensor(rng, {3, L}, -5.0, 5.0);
    double previous = -1.0;
    for (double tau : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      Tape tape(false);
      const Tensor a = ops::softmax_temperature(tape.constant(s), tau).value();
      double h_row0 = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        double total = 0.0;
        for (double v : a.row(r)) {
          CHECK(v >= 0.0);
          total += v;
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }
      h_row0 = entropy(a.row(0));
      CHECK(h_row0 >= previous - 1e-12);
      previous = h_row0;
    }
  }
}

TEST_CASE("backward examples and contract errors") {
  SUBCASE("sum") {
    Tape tape;
    Var x = tape.input(Tensor::vector({1, 2, 3}));
    tape.backward(ops::sum(x));
    CHECK(tape.grad(x) == Tensor::vector({1, 1, 1}));
  }
  SUBCASE("square") {
    Tape tape;
    Var x = tape.input(Tensor::scalar(3.0));
    tape.backward(ops::mul(x, x));
    CHECK(tape.grad(x)[0] == 6.0);
  }
  SUBCASE("non-scalar loss") {
    Tape tape;
    Var x = tape.input(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(ops::gelu(x)), ContractError);
  }
  SUBCASE("tape is consumed") {
    Tape tape;
    Var x = tape.input(Tensor::vector({1, 2}));
    Var loss = ops::sum(x);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), ContractError);
    CHECK_THROWS_AS(ops::sum(x), ContractError);
  }
  SUBCASE("parameters accumulate additively") {
    ad::Parameter p("w", Tensor::vector({2.0}));
    for (int i = 0; i < 2; ++i) {
      Tape tape;
      Var w = tape.parameter(p);
      tape.backward(ops::sum(ops::mul(w, w)));
    }
    CHECK(p.grad[0] == 8.0);
  }
}

TEST_CASE("every primitive passes the finite-difference check on 20 random instances") {
  Rng rng(2024);
  for (const auto& c : testing::primitive_cases()) {
    CAPTURE(c.name);
    for (int i = 0; i < 20; ++i) {
      const auto inst = c.make(rng);
      const auto r = grad_check(inst.forward, inst.leaves);
      CHECK(r.finite);
      CHECK(r.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("replaying a seeded forward and backward gives bit-identical grads") {
  auto run = [] {
    Rng rng(99);
    const auto cases = testing::primitive_cases();
    std::vector<Tensor> grads;
    for (const auto& c : cases) {
      const auto inst = c.make(rng);
      Tape tape;
      std::vector<Var> vars;
      for (const auto& t : inst.leaves) vars.push_back(tape.input(t));
      tape.backward(inst.forward(tape, vars));
      for (const auto& v : vars) grads.push_back(tape.grad(v));
    }
    return grads;
  };
  CHECK(run() == run());
}

TEST_CASE("embedding_bag_mean data errors") {
  Tape tape;
  Var table = tape.input(Tensor({4, 2}, 1.0));
  const std::vector<std::int32_t> oov{1, 9};
  CHECK_THROWS_AS(ops::embedding_bag_mean(table, oov, 1, 2), DataError);
  const std::vector<std::int32_t> all_pad{0, 0};
  CHECK_THROWS_AS(ops::embedding_bag_mean(table, all_pad, 1, 2), DataError);
}
