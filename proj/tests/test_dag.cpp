#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "compofun/dag.hpp"
#include "util.hpp"

using namespace cf;
using testutil::in;
using testutil::mk;
using testutil::trig_triple;

TEST_CASE("trig triple evaluates and validates") {
  auto f = trig_triple();
  auto y = f.evaluate({0, 0, 0});
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(1.0));
  CHECK(y[2] == doctest::Approx(0.0));

  auto y2 = f.evaluate({0.5, -0.25, 0.75});
  CHECK(y2[0] == doctest::Approx(std::sin(0.5 * -0.25)));
  CHECK(y2[1] == doctest::Approx(std::cos(-0.25 * 0.75)));
  CHECK(y2[2] == doctest::Approx(0.5 * 0.75));

  auto rep = validate(f, 512);
  CHECK(rep.pass);
}

TEST_CASE("equal-layer edge is a layering failure") {
  std::vector<NodeSpec> nodes = {
      in("x"),
      mk("a", NodeKind::general, "sin", {}, 1, {"x"}, 1.5),
      mk("b", NodeKind::general, "cos", {}, 1, {"a"}, 1.5),
      mk("o", NodeKind::identity, "identity", {}, 2, {"b"}, 1.5),
  };
  CompositionalFunction f(1, 1, 1.0, std::move(nodes));
  auto rep = validate(f, 16);
  CHECK_FALSE(rep.pass);
  bool layering = false;
  for (const auto& is : rep.issues) layering |= is.category == "layering";
  CHECK(layering);
}

TEST_CASE("undersized consumer domain is a compatibility failure") {
  // sin node with radius 0.5 fed by 3z on inputs in [-1,1]
  std::vector<NodeSpec> nodes = {
      in("z"),
      mk("t", NodeKind::linear, "affine", {0, 3}, 1, {"z"}, 1.1),
      mk("s", NodeKind::general, "sin", {}, 2, {"t"}, 0.5),
  };
  CompositionalFunction f(1, 1, 1.0, std::move(nodes));
  auto rep = validate(f, 256);
  CHECK_FALSE(rep.pass);
  bool compat = false;
  for (const auto& is : rep.issues) compat |= is.category == "compatibility";
  CHECK(compat);
}

TEST_CASE("evaluate rejects out-of-domain input") {
  auto f = trig_triple();
  CHECK_THROWS_AS(f.evaluate({2.0, 0, 0}), DomainError);
}

TEST_CASE("identity insertion closes layer gaps and preserves evaluation") {
  // y = x + sin(x), with x reaching the layer-2 sum over a gap of 2
  std::vector<NodeSpec> nodes = {
      in("x"),
      mk("s", NodeKind::general, "sin", {}, 1, {"x"}, 1.1),
      mk("t", NodeKind::general, "tanh", {}, 2, {"s"}, 1.1),
      mk("o", NodeKind::linear, "affine", {0, 1, 1}, 3, {"x", "t"}, 1.1),
  };
  CompositionalFunction f(1, 1, 1.0, std::move(nodes));
  auto g = insert_identity_nodes(f);
  CHECK(g.nodes().size() == f.nodes().size() + 2);  // gap of 3 needs 2 identities
  for (const auto& n : g.nodes())
    for (const auto& e : n.inputs) CHECK(n.layer - g.node(e.src).layer == 1);
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    auto x = sample_domain(f, rng);
    CHECK(g.evaluate(x)[0] == doctest::Approx(f.evaluate(x)[0]).epsilon(1e-14));
  }
  // fixed point: no gaps means unchanged node count
  auto h = insert_identity_nodes(g);
  CHECK(h.nodes().size() == g.nodes().size());
}

TEST_CASE("interval ranges bound sampled node values") {
  auto f = trig_triple();
  auto rng_iv = interval_ranges(f);
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    auto x = sample_domain(f, rng);
    auto val = f.node_values(x);
    for (size_t i = 0; i < val.size(); ++i) {
      CHECK(val[i] >= rng_iv[i].lo - 1e-12);
      CHECK(val[i] <= rng_iv[i].hi + 1e-12);
    }
  }
}

TEST_CASE("affine and neuron primitives differentiate correctly") {
  const auto& aff = primitive("affine");
  std::vector<double> p = {1.0, 2.0, -3.0};
  std::vector<double> z = {0.5, 0.25};
  CHECK(aff.eval(p, z) == doctest::Approx(1 + 2 * 0.5 - 3 * 0.25));
  std::vector<int> k = {1, 0};
  CHECK(aff.deriv(p, z, k) == doctest::Approx(2.0));

  const auto& nt = primitive("neuron_tanh");
  double pre = 1 + 2 * 0.5 - 3 * 0.25;
  CHECK(nt.eval(p, z) == doctest::Approx(std::tanh(pre)));
  double t = std::tanh(pre);
  CHECK(nt.deriv(p, z, k) == doctest::Approx((1 - t * t) * 2.0));
  std::vector<int> k2 = {1, 1};
  CHECK(nt.deriv(p, z, k2) == doctest::Approx(tanh_derivative(2, t) * 2.0 * -3.0));
}

TEST_CASE("tanh derivatives match finite differences") {
  for (double s : {-1.2, -0.3, 0.0, 0.7, 2.1}) {
    double h = 1e-5;
    for (int n = 1; n <= 3; ++n) {
      double lo = tanh_derivative(n - 1, std::tanh(s - h));
      double hi = tanh_derivative(n - 1, std::tanh(s + h));
      double fd = (hi - lo) / (2 * h);
      CHECK(tanh_derivative(n, std::tanh(s)) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}
