#include <cmath>

#include "doctest.h"
#include "nagm/gradcheck.hpp"
#include "nagm/tape.hpp"
#include "test_util.hpp"

using namespace nagm;

namespace {

// Scalarize a tensor var by dotting with a fixed weight vector so a single
// backward exercises every output coordinate.
Var weighted_sum(Tape& t, Var v, const Tensor& weights) {
  return t.dot(v, t.leaf(weights));
}

}  // namespace

TEST_CASE("affine identity and hand-evaluated cases") {
  Tape t;
  Var x = t.leaf(Tensor::vec({1, 2}));
  Var w = t.leaf(Tensor::identity(2));
  Var b = t.leaf(Tensor::vec({0, 0}));
  Var y = t.affine(x, w, b);
  CHECK(t.value(y).data == std::vector<double>{1, 2});

  Var x2 = t.leaf(Tensor::vec({1, 1}));
  Var w2 = t.leaf(Tensor::matrix(2, 2, {2, 0, 0, 3}));
  Var b2 = t.leaf(Tensor::vec({1, -1}));
  Var y2 = t.affine(x2, w2, b2);
  CHECK(t.value(y2).data == std::vector<double>{3, 2});
}

TEST_CASE("affine rejects mismatched shapes naming both") {
  Tape t;
  Var x = t.leaf(Tensor::vec({1, 2, 3}));
  Var w = t.leaf(Tensor::identity(2));
  Var b = t.leaf(Tensor::vec({0, 0}));
  CHECK_THROWS_WITH_AS(t.affine(x, w, b),
                       doctest::Contains("(2x2)"), DimensionError);
}

TEST_CASE("affine gradient wrt W matches finite differences at random 3x4") {
  std::mt19937_64 rng(42);
  ParamStore params;
  params.add("W", test::random_tensor({3, 4}, rng));
  Tensor x = test::random_tensor({4}, rng);
  Tensor b = test::random_tensor({3}, rng);
  Tensor ones = Tensor::zeros({3});
  for (double& v : ones.data) v = 1.0;

  auto f = [&](const ParamStore& p) {
    Tape t;
    Var w = t.leaf(p.at("W"));
    Var out = weighted_sum(t, t.affine(t.leaf(x), w, t.leaf(b)), ones);
    t.backward(out);
    return BackpropResult{t.scalar(out), {{"W", t.grad(w)}}};
  };
  auto report = grad_check(f, params, 1e-5);
  CHECK(report.max_rel_err <= 1e-6);
}

TEST_CASE("elementwise primitives") {
  Tape t;
  CHECK(t.value(t.sigmoid(t.leaf(Tensor::scalar(0)))).data[0] ==
        doctest::Approx(0.5));
  CHECK(t.value(t.tanh(t.leaf(Tensor::scalar(0)))).data[0] ==
        doctest::Approx(0.0));
  Var c = t.concat(t.leaf(Tensor::vec({1, 2})), t.leaf(Tensor::vec({3})));
  CHECK(t.value(c).data == std::vector<double>{1, 2, 3});
}

TEST_CASE("softmax basics") {
  Tape t;
  Var u = t.softmax(t.leaf(Tensor::vec({0, 0, 0})));
  for (double v : t.value(u).data) CHECK(v == doctest::Approx(1.0 / 3));

  Var big = t.softmax(t.leaf(Tensor::vec({1000, 0})));
  CHECK(t.value(big).data[0] == doctest::Approx(1.0));
  CHECK(t.value(big).data[1] == doctest::Approx(0.0));
  CHECK(t.value(big).all_finite());
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor x = test::random_tensor({5}, rng, -3, 3);
    Tensor shifted = x;
    for (double& v : shifted.data) v += 17.5;
    Tape t;
    const Tensor& a = t.value(t.softmax(t.leaf(x)));
    const Tensor& b = t.value(t.softmax(t.leaf(shifted)));
    double sum = 0.0;
    for (double v : a.data) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::fabs(a.data[i] - b.data[i]) <= 1e-12);
    }
  }
}

TEST_CASE("softmax gradient matches finite differences at random length 5") {
  std::mt19937_64 rng(3);
  ParamStore params;
  params.add("x", test::random_tensor({5}, rng));
  Tensor w = test::random_tensor({5}, rng);
  auto f = [&](const ParamStore& p) {
    Tape t;
    Var x = t.leaf(p.at("x"));
    Var out = weighted_sum(t, t.softmax(x), w);
    t.backward(out);
    return BackpropResult{t.scalar(out), {{"x", t.grad(x)}}};
  };
  CHECK(grad_check(f, params, 1e-5).max_rel_err <= 1e-6);
}

TEST_CASE("max_pool_time semantics") {
  Tape t;
  std::vector<Var> states = {t.leaf(Tensor::vec({1, 4})),
                             t.leaf(Tensor::vec({3, 2}))};
  CHECK(t.value(t.max_pool_time(states, {true, true})).data ==
        std::vector<double>{3, 4});

  Var single = t.leaf(Tensor::vec({-1, 2}));
  CHECK(t.value(t.max_pool_time({single}, {true})).data ==
        std::vector<double>{-1, 2});

  std::vector<Var> masked = {t.leaf(Tensor::vec({5, 5})),
                             t.leaf(Tensor::vec({0, 9}))};
  CHECK(t.value(t.max_pool_time(masked, {true, false})).data ==
        std::vector<double>{5, 5});

  CHECK_THROWS_AS(t.max_pool_time(masked, {false, false}), DomainError);
}

TEST_CASE("max_pool all-true mask equals exact coordinate-wise max") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Tensor> states;
    for (int i = 0; i < 4; ++i) states.push_back(test::random_tensor({6}, rng));
    Tape t;
    std::vector<Var> vars;
    for (const auto& s : states) vars.push_back(t.leaf(s));
    const Tensor& pooled = t.value(t.max_pool(vars));
    for (std::size_t k = 0; k < 6; ++k) {
      double mx = states[0].data[k];
      for (const auto& s : states) mx = std::max(mx, s.data[k]);
      CHECK(pooled.data[k] == mx);
    }
  }
}

TEST_CASE("max_pool ties route gradient to the earliest position") {
  Tape t;
  Var a = t.leaf(Tensor::vec({2}));
  Var b = t.leaf(Tensor::vec({2}));
  Var out = t.max_pool({a, b});
  t.backward(t.dot(out, t.leaf(Tensor::vec({1}))));
  CHECK(t.grad(a).data[0] == 1.0);
  CHECK(t.grad(b).data[0] == 0.0);
}

TEST_CASE("cosine values and errors") {
  Tape t;
  Var v = t.leaf(Tensor::vec({2, -1, 0.5}));
  CHECK(t.scalar(t.cosine(v, v)) == doctest::Approx(1.0));
  CHECK(t.scalar(t.cosine(t.leaf(Tensor::vec({1, 0})),
                          t.leaf(Tensor::vec({0, 1})))) ==
        doctest::Approx(0.0));
  CHECK(std::fabs(t.scalar(t.cosine(t.leaf(Tensor::vec({1, 1})),
                                    t.leaf(Tensor::vec({1, 0})))) -
                  std::sqrt(0.5)) <= 1e-9);
  Var zero = t.leaf(Tensor::vec({0, 0}));
  CHECK_THROWS_AS(t.cosine(zero, zero), DomainError);
}

TEST_CASE("cosine is symmetric and scale invariant") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    Tensor u = test::random_tensor({5}, rng);
    Tensor v = test::random_tensor({5}, rng);
    double a = 0.1 + (rng() >> 11) * 0x1.0p-53 * 5.0;
    Tensor au = u;
    for (double& x : au.data) x *= a;
    Tape t;
    double c1 = t.scalar(t.cosine(t.leaf(u), t.leaf(v)));
    double c2 = t.scalar(t.cosine(t.leaf(v), t.leaf(u)));
    double c3 = t.scalar(t.cosine(t.leaf(au), t.leaf(v)));
    CHECK(std::fabs(c1 - c2) <= 1e-12);
    CHECK(std::fabs(c1 - c3) <= 1e-12);
  }
}

TEST_CASE("every primitive passes grad_check in isolation") {
  std::mt19937_64 rng(99);
  auto check_unary = [&](auto op, std::vector<std::size_t> shape) {
    ParamStore params;
    params.add("x", test::random_tensor(shape, rng));
    Tensor w = test::random_tensor(shape, rng);
    auto f = [&](const ParamStore& p) {
      Tape t;
      Var x = t.leaf(p.at("x"));
      Var out = weighted_sum(t, op(t, x), w);
      t.backward(out);
      return BackpropResult{t.scalar(out), {{"x", t.grad(x)}}};
    };
    CHECK(grad_check(f, params, 1e-5).max_rel_err <= 1e-6);
  };
  check_unary([](Tape& t, Var x) { return t.sigmoid(x); }, {6});
  check_unary([](Tape& t, Var x) { return t.tanh(x); }, {5});
  check_unary([](Tape& t, Var x) { return t.softmax(x); }, {6});
  check_unary([](Tape& t, Var x) { return t.scale(x, -2.5); }, {4});
  check_unary([](Tape& t, Var x) { return t.add_const(x, 0.7); }, {4});

  // Binary ops with both operands trainable.
  ParamStore params;
  params.add("a", test::random_tensor({5}, rng));
  params.add("b", test::random_tensor({5}, rng));
  params.add("W", test::random_tensor({4, 5}, rng));
  params.add("s", test::random_tensor({1}, rng, 0.2, 1.0));
  Tensor w5 = test::random_tensor({5}, rng);
  Tensor w4 = test::random_tensor({4}, rng);
  Tensor w10 = test::random_tensor({10}, rng);

  auto run = [&](auto build) {
    auto f = [&](const ParamStore& p) {
      Tape t;
      Var a = t.leaf(p.at("a"));
      Var b = t.leaf(p.at("b"));
      Var W = t.leaf(p.at("W"));
      Var s = t.leaf(p.at("s"));
      Var out = build(t, a, b, W, s);
      t.backward(out);
      return BackpropResult{t.scalar(out),
                            {{"a", t.grad(a)},
                             {"b", t.grad(b)},
                             {"W", t.grad(W)},
                             {"s", t.grad(s)}}};
    };
    CHECK(grad_check(f, params, 1e-5).max_rel_err <= 1e-6);
  };
  run([&](Tape& t, Var a, Var b, Var, Var) {
    return weighted_sum(t, t.add(a, b), w5);
  });
  run([&](Tape& t, Var a, Var b, Var, Var) {
    return weighted_sum(t, t.sub(a, b), w5);
  });
  run([&](Tape& t, Var a, Var b, Var, Var) {
    return weighted_sum(t, t.mul(a, b), w5);
  });
  run([&](Tape& t, Var a, Var b, Var, Var) {
    return weighted_sum(t, t.concat(a, b), w10);
  });
  run([&](Tape& t, Var a, Var, Var W, Var) {
    return weighted_sum(t, t.matvec(W, a), w4);
  });
  run([&](Tape& t, Var, Var b, Var W, Var) {
    Tensor pad = w5;
    // matvec_t: W^T x with x of dim 4; reuse b's first 4 coords via W rows.
    (void)pad;
    return weighted_sum(t, t.matvec_t(W, t.matvec(W, b)), w5);
  });
  run([&](Tape& t, Var a, Var b, Var, Var) { return t.dot(a, b); });
  run([&](Tape& t, Var a, Var b, Var, Var) { return t.cosine(a, b); });
  run([&](Tape& t, Var a, Var b, Var, Var s) {
    return weighted_sum(t, t.scale_by(t.add(a, b), s), w5);
  });
  run([&](Tape& t, Var a, Var b, Var, Var) {
    return weighted_sum(t, t.max_pool({a, b}), w5);
  });
  run([&](Tape& t, Var a, Var, Var, Var) {
    return t.log_softmax_pick(a, 2);
  });
  run([&](Tape& t, Var, Var, Var, Var s) {
    return t.bce_with_logit(s, 1.0);
  });
  run([&](Tape& t, Var a, Var, Var W, Var) {
    return weighted_sum(t, t.column(W, 3), w4);
  });
}

TEST_CASE("grad_check on a quadratic is exact up to rounding") {
  std::mt19937_64 rng(1);
  ParamStore params;
  params.add("theta", test::random_tensor({7}, rng));
  params.add("unused", test::random_tensor({3}, rng));
  auto f = [](const ParamStore& p) {
    Tape t;
    Var x = t.leaf(p.at("theta"));
    Var out = t.dot(x, x);
    t.backward(out);
    return BackpropResult{t.scalar(out),
                          {{"theta", t.grad(x)},
                           {"unused", Tensor::zeros({3})}}};
  };
  auto report = grad_check(f, params, 1e-4);
  for (const auto& e : report.entries) {
    if (e.name == "theta") CHECK(e.max_rel_err <= 1e-8);
  }

  // Parameter not used by f: analytic gradient exactly zero.
  BackpropResult r = f(params);
  for (double v : r.grads.at("unused").data) CHECK(v == 0.0);
}

TEST_CASE("grad_check validates eps range") {
  ParamStore params;
  params.add("x", Tensor::vec({1.0}));
  auto f = [](const ParamStore& p) {
    Tape t;
    Var x = t.leaf(p.at("x"));
    Var out = t.dot(x, x);
    t.backward(out);
    return BackpropResult{t.scalar(out), {{"x", t.grad(x)}}};
  };
  CHECK_THROWS_AS(grad_check(f, params, 1e-2), ConfigError);
}

TEST_CASE("adagrad first step and fixed point") {
  ParamStore params;
  params.add("w", Tensor::vec({1.0, 2.0}));
  double lr = 0.1, eps = 1e-8;
  std::map<std::string, Tensor> grads{{"w", Tensor::vec({0.5, -0.25})}};
  params.adagrad_step(grads, lr, eps);
  // First step: param -= lr * g / (|g| + eps).
  CHECK(params.at("w").data[0] ==
        doctest::Approx(1.0 - lr * 0.5 / (0.5 + eps)).epsilon(1e-12));
  CHECK(params.at("w").data[1] ==
        doctest::Approx(2.0 + lr * 0.25 / (0.25 + eps)).epsilon(1e-12));

  // Zero gradient: identity on parameters.
  Tensor before = params.at("w");
  params.adagrad_step({{"w", Tensor::vec({0.0, 0.0})}}, lr, eps);
  CHECK(params.at("w").data == before.data);

  // Missing key: treated as zero gradient.
  params.adagrad_step({}, lr, eps);
  CHECK(params.at("w").data == before.data);
}

TEST_CASE("adagrad accumulator arithmetic over two identical steps") {
  ParamStore params;
  params.add("w", Tensor::vec({0.0}));
  std::map<std::string, Tensor> grads{{"w", Tensor::vec({1.0})}};
  double eps = 1e-12;
  params.adagrad_step(grads, 1.0, eps);
  CHECK(params.at("w").data[0] == doctest::Approx(-1.0).epsilon(1e-9));
  params.adagrad_step(grads, 1.0, eps);
  CHECK(params.at("w").data[0] ==
        doctest::Approx(-1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("adagrad rejects non-finite gradients") {
  ParamStore params;
  params.add("w", Tensor::vec({1.0}));
  Tensor bad = Tensor::vec({1.0});
  bad.data[0] = std::nan("");
  CHECK_THROWS_AS(params.adagrad_step({{"w", bad}}, 0.1, 1e-8), TrainingError);
}
