#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "scwr/cells.hpp"
#include "scwr/graph.hpp"
#include "scwr/tensor.hpp"

using namespace scwr;

namespace {

Tensor64 random_tensor(std::vector<int> shape, Rng& rng, double lo = -2.0,
                       double hi = 2.0) {
  Tensor64 t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

using BuildFn =
    std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>;

double eval_loss(const BuildFn& build, const std::vector<Tensor64>& inputs) {
  Graph<double> g;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(make_leaf(g, t));
  return build(g, vars).value().item();
}

// Central finite differences against the tape gradients; returns the worst
// relative error over every coordinate of every input.
double fd_max_rel_err(const BuildFn& build, std::vector<Tensor64> inputs,
                      double eps = 1e-5) {
  Graph<double> g;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(make_leaf(g, t));
  Var<double> loss = build(g, vars);
  g.backward(loss.id);
  std::vector<Tensor64> analytic;
  for (auto& v : vars) analytic.push_back(v.grad());

  double worst = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (int64_t j = 0; j < inputs[i].size(); ++j) {
      double orig = inputs[i][j];
      inputs[i][j] = orig + eps;
      double up = eval_loss(build, inputs);
      inputs[i][j] = orig - eps;
      double dn = eval_loss(build, inputs);
      inputs[i][j] = orig;
      double num = (up - dn) / (2 * eps);
      double ana = analytic[i][j];
      double rel = std::fabs(ana - num) /
                   std::max({std::fabs(ana), std::fabs(num), 1e-3});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// Scalar probe so the loss is well-conditioned for any output shape.
Var<double> probe(Graph<double>& g, Var<double> out, Rng& rng) {
  Tensor64 w(out.value().shape);
  for (auto& v : w.data) v = rng.uniform(-1.0, 1.0);
  return sum_all(mul(out, make_const(g, w)));
}

}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
  Tensor64 eye({2, 2}, {1, 0, 0, 1});
  Tensor64 m({2, 2}, {3, -1, 2, 5});
  Tensor64 out = matmul(eye, m);
  for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(m[i]));

  Tensor64 a({2, 2}, {1, 2, 3, 4});
  Tensor64 b({2, 1}, {1, 1});
  Tensor64 p = matmul(a, b);
  CHECK(p[0] == doctest::Approx(3));
  CHECK(p[1] == doctest::Approx(7));
}

TEST_CASE("matmul shape mismatch is an error") {
  Tensor64 a({2, 3});
  Tensor64 b({2, 3});
  CHECK_THROWS_AS((void)matmul(a, b), Error);
}

TEST_CASE("matmul gradient vs central differences") {
  Rng rng(11);
  std::vector<Tensor64> inputs{random_tensor({3, 4}, rng),
                               random_tensor({4, 2}, rng)};
  Rng prng(12);
  auto build = [&](Graph<double>& g, std::vector<Var<double>>& v) {
    Rng r(12);
    return probe(g, matmul(v[0], v[1]), r);
  };
  (void)prng;
  CHECK(fd_max_rel_err(build, inputs) < 1e-6);
}

TEST_CASE("sigmoid / softplus / tanh basics") {
  Tensor64 z = Tensor64::scalar(0.0);
  CHECK(sigmoid(z).item() == doctest::Approx(0.5));

  for (double x = -5; x <= 5; x += 0.5) {
    double sp = softplus(Tensor64::scalar(x)).item();
    CHECK(sp == doctest::Approx(std::log(1 + std::exp(x))).epsilon(1e-12));
  }

  Rng rng(3);
  std::vector<Tensor64> inputs{random_tensor({2, 3}, rng)};
  auto build = [](Graph<double>& g, std::vector<Var<double>>& v) {
    Rng r(4);
    return probe(g, vtanh(v[0]), r);
  };
  CHECK(fd_max_rel_err(build, inputs) < 1e-6);
}

TEST_CASE("logsumexp values and stability") {
  Tensor64 two_zero({2}, {0.0, 0.0});
  CHECK(logsumexp_axis(two_zero, 0).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor64 big({2}, {1000.0, 1000.0});
  CHECK(logsumexp_axis(big, 0).item() ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));

  // identity by construction: lse(x) == max(x) + log sum exp(x - max(x))
  Rng rng(5);
  Tensor64 x = random_tensor({4, 7}, rng, -3, 3);
  Tensor64 lse = logsumexp_axis(x, 1);
  Tensor64 m = max_axis(x, 1);
  Tensor64 ref = add(m, vlog(sum_axis(vexp(sub(x, m)), 1)));
  for (int64_t i = 0; i < lse.size(); ++i) CHECK(lse[i] == ref[i]);
}

TEST_CASE("sum gradient is all-ones") {
  Graph<double> g;
  Rng rng(6);
  Var<double> x = make_leaf(g, random_tensor({3, 5}, rng));
  Var<double> s = sum_all(x);
  g.backward(s.id);
  Tensor64 gx = x.grad();
  for (double v : gx.data) CHECK(v == 1.0);
}

TEST_CASE("backward on x^2 and sum(A B)") {
  {
    Graph<double> g;
    Var<double> x = make_leaf(g, Tensor64::scalar(3.0));
    Var<double> loss = mul(x, x);
    g.backward(loss.id);
    CHECK(x.grad().item() == doctest::Approx(6.0));
  }
  {
    Graph<double> g;
    Rng rng(7);
    Tensor64 bval = random_tensor({4, 2}, rng);
    Var<double> a = make_leaf(g, random_tensor({3, 4}, rng));
    Var<double> b = make_leaf(g, bval);
    Var<double> loss = sum_all(matmul(a, b));
    g.backward(loss.id);
    // dL/dA = ones(3,2) . B^T, i.e. row r of grad_A is the row sums of B.
    Tensor64 ga = a.grad();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        double rowsum = bval.at(j, 0) + bval.at(j, 1);
        CHECK(ga.at(i, j) == doctest::Approx(rowsum).epsilon(1e-12));
      }
  }
}

TEST_CASE("non-scalar loss rejected") {
  Graph<double> g;
  Var<double> x = make_leaf(g, Tensor64({2, 2}));
  CHECK_THROWS_AS(g.backward(x.id), Error);
}

TEST_CASE("composite GRU cell gradient vs finite differences") {
  int in = 5, R = 4, B = 2;
  Rng rng(21);
  std::vector<Tensor64> inputs{
      random_tensor({B, in}, rng, -1, 1),   // x
      random_tensor({B, R}, rng, -1, 1),    // h
      random_tensor({in, 3 * R}, rng, -0.5, 0.5),
      random_tensor({R, 3 * R}, rng, -0.5, 0.5),
      random_tensor({3 * R}, rng, -0.5, 0.5),
      random_tensor({3 * R}, rng, -0.5, 0.5)};
  auto build = [](Graph<double>& g, std::vector<Var<double>>& v) {
    GruWeightsV<double> w{v[2], v[3], v[4], v[5]};
    Rng r(22);
    return probe(g, gru_cell(v[0], v[1], w), r);
  };
  CHECK(fd_max_rel_err(build, inputs) < 1e-4);
}

TEST_CASE("composite LSTM cell gradient vs finite differences") {
  int in = 4, R = 3, B = 2;
  Rng rng(31);
  std::vector<Tensor64> inputs{
      random_tensor({B, in}, rng, -1, 1),  random_tensor({B, R}, rng, -1, 1),
      random_tensor({B, R}, rng, -1, 1),   random_tensor({in, 4 * R}, rng, -0.5, 0.5),
      random_tensor({R, 4 * R}, rng, -0.5, 0.5), random_tensor({4 * R}, rng, -0.5, 0.5)};
  auto build = [](Graph<double>& g, std::vector<Var<double>>& v) {
    LstmWeightsV<double> w{v[3], v[4], v[5]};
    LstmStateV<double> s{v[1], v[2]};
    auto out = lstm_cell(v[0], s, w);
    Rng r(32);
    return probe(g, out.h, r);
  };
  CHECK(fd_max_rel_err(build, inputs) < 1e-4);
}

TEST_CASE("every primitive matches finite differences on random inputs") {
  Rng rng(41);
  auto check = [&](const char* name, const BuildFn& build,
                   std::vector<Tensor64> inputs) {
    double err = fd_max_rel_err(build, std::move(inputs));
    INFO(name);
    CHECK(err < 1e-4);
  };

  auto probe_build = [](std::function<Var<double>(Graph<double>&,
                                                  std::vector<Var<double>>&)>
                            f,
                        uint64_t seed) -> BuildFn {
    return [f, seed](Graph<double>& g, std::vector<Var<double>>& v) {
      Rng r(seed);
      return probe(g, f(g, v), r);
    };
  };

  // unary (inputs kept away from domain edges / kinks)
  check("sigmoid", probe_build([](auto&, auto& v) { return sigmoid(v[0]); }, 1),
        {random_tensor({3, 4}, rng)});
  check("tanh", probe_build([](auto&, auto& v) { return vtanh(v[0]); }, 2),
        {random_tensor({3, 4}, rng)});
  check("exp", probe_build([](auto&, auto& v) { return vexp(v[0]); }, 3),
        {random_tensor({3, 4}, rng)});
  check("log", probe_build([](auto&, auto& v) { return vlog(v[0]); }, 4),
        {random_tensor({3, 4}, rng, 0.5, 2.0)});
  check("sqrt", probe_build([](auto&, auto& v) { return vsqrt(v[0]); }, 5),
        {random_tensor({3, 4}, rng, 0.5, 2.0)});
  check("softplus",
        probe_build([](auto&, auto& v) { return softplus(v[0]); }, 6),
        {random_tensor({3, 4}, rng)});
  check("log1mexp",
        probe_build([](auto&, auto& v) { return log1mexp(v[0]); }, 7),
        {random_tensor({3, 4}, rng, 0.2, 2.0)});
  check("clamp_min",
        probe_build([](auto&, auto& v) { return clamp_min(v[0], 0.1); }, 8),
        {random_tensor({3, 4}, rng, 0.3, 2.0)});
  check("scale", probe_build([](auto&, auto& v) { return scale(v[0], -1.7); }, 9),
        {random_tensor({3, 4}, rng)});
  check("add_scalar",
        probe_build([](auto&, auto& v) { return add_scalar(v[0], 0.9); }, 10),
        {random_tensor({3, 4}, rng)});

  // binary incl. broadcast variants
  check("add", probe_build([](auto&, auto& v) { return add(v[0], v[1]); }, 11),
        {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
  check("add_bcast_row",
        probe_build([](auto&, auto& v) { return add(v[0], v[1]); }, 12),
        {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
  check("add_bcast_col",
        probe_build([](auto&, auto& v) { return add(v[0], v[1]); }, 13),
        {random_tensor({3, 4}, rng), random_tensor({3, 1}, rng)});
  check("sub", probe_build([](auto&, auto& v) { return sub(v[0], v[1]); }, 14),
        {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
  check("mul", probe_build([](auto&, auto& v) { return mul(v[0], v[1]); }, 15),
        {random_tensor({3, 4}, rng), random_tensor({3, 1}, rng)});
  check("div", probe_build([](auto&, auto& v) { return divide(v[0], v[1]); }, 16),
        {random_tensor({3, 4}, rng), random_tensor({4}, rng, 0.5, 2.0)});
  check("mul_scalar_bcast",
        probe_build([](auto&, auto& v) { return mul(v[0], v[1]); }, 17),
        {random_tensor({3, 4}, rng), random_tensor({1}, rng, 0.5, 2.0)});

  // matrix / structural
  check("matmul",
        probe_build([](auto&, auto& v) { return matmul(v[0], v[1]); }, 18),
        {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
  check("transpose",
        probe_build([](auto&, auto& v) { return transpose(v[0]); }, 19),
        {random_tensor({3, 4}, rng)});
  check("reshape",
        probe_build([](auto&, auto& v) { return reshape(v[0], {4, 3}); }, 20),
        {random_tensor({3, 4}, rng)});
  check("slice_rows",
        probe_build([](auto&, auto& v) { return slice_rows(v[0], 1, 2); }, 21),
        {random_tensor({4, 3}, rng)});
  check("slice_cols",
        probe_build([](auto&, auto& v) { return slice_cols(v[0], 1, 2); }, 22),
        {random_tensor({3, 4}, rng)});
  check("concat_rows",
        probe_build(
            [](auto&, auto& v) {
              return concat_rows(std::vector<Var<double>>{v[0], v[1]});
            },
            23),
        {random_tensor({2, 3}, rng), random_tensor({4, 3}, rng)});
  check("concat_cols",
        probe_build(
            [](auto&, auto& v) {
              return concat_cols(std::vector<Var<double>>{v[0], v[1]});
            },
            24),
        {random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)});
  check("repeat_rows",
        probe_build([](auto&, auto& v) { return repeat_rows(v[0], 3); }, 25),
        {random_tensor({4, 2}, rng)});
  check("shift_rows",
        probe_build([](auto&, auto& v) { return shift_rows(v[0], 1); }, 26),
        {random_tensor({4, 2}, rng)});
  check("smooth1d",
        probe_build([](auto&, auto& v) { return smooth1d(v[0], v[1]); }, 27),
        {random_tensor({6, 2}, rng), random_tensor({3}, rng)});

  // reductions
  check("sum_axis0",
        probe_build([](auto&, auto& v) { return sum_axis(v[0], 0); }, 28),
        {random_tensor({3, 4}, rng)});
  check("sum_axis1",
        probe_build([](auto&, auto& v) { return sum_axis(v[0], 1); }, 29),
        {random_tensor({3, 4}, rng)});
  check("mean_axis",
        probe_build([](auto&, auto& v) { return mean_axis(v[0], 1); }, 30),
        {random_tensor({3, 4}, rng)});
  check("logsumexp_axis",
        probe_build([](auto&, auto& v) { return logsumexp_axis(v[0], 1); }, 31),
        {random_tensor({3, 4}, rng)});
  check("max_axis",
        probe_build([](auto&, auto& v) { return max_axis(v[0], 1); }, 32),
        {Tensor64({2, 3}, {0.1, 0.9, -0.4, 1.4, -1.2, 0.3})});
  check("sum_all",
        probe_build([](auto&, auto& v) { return sum_all(mul(v[0], v[0])); }, 33),
        {random_tensor({3, 4}, rng)});
  check("mean_all",
        probe_build([](auto&, auto& v) { return mean_all(mul(v[0], v[0])); }, 34),
        {random_tensor({3, 4}, rng)});
}

TEST_CASE("backward is deterministic: identical graphs give identical bits") {
  auto run = [](std::vector<Tensor64>& grads_out) {
    Graph<double> g;
    Rng rng(55);
    Var<double> a = make_leaf(g, random_tensor({6, 5}, rng));
    Var<double> b = make_leaf(g, random_tensor({5, 4}, rng));
    Var<double> h = vtanh(matmul(a, b));
    Var<double> loss = sum_all(mul(h, h));
    g.backward(loss.id);
    grads_out = {a.grad(), b.grad()};
  };
  std::vector<Tensor64> g1, g2;
  run(g1);
  run(g2);
  for (size_t i = 0; i < g1.size(); ++i) {
    REQUIRE(g1[i].size() == g2[i].size());
    CHECK(std::memcmp(g1[i].data.data(), g2[i].data.data(),
                      sizeof(double) * size_t(g1[i].size())) == 0);
  }
}

TEST_CASE("log of non-positive input is an error") {
  Tensor64 bad({2}, {1.0, 0.0});
  CHECK_THROWS_AS((void)vlog(bad), Error);
}

TEST_CASE("non-broadcastable shapes are an error") {
  Tensor64 a({3, 4});
  Tensor64 b({2, 4});
  CHECK_THROWS_AS((void)add(a, b), Error);
}

TEST_CASE("invalid reduction axis is an error") {
  Tensor64 a({3, 4});
  CHECK_THROWS_AS((void)sum_axis(a, 2), Error);
}

TEST_CASE("finite-check mode flags NaN") {
  Graph<double> g;
  g.check_finite = true;
  Var<double> x = make_leaf(g, Tensor64({1}, {-1.0}));
  CHECK_THROWS_AS((void)vsqrt(x), Error);  // sqrt(-1) -> NaN
}
