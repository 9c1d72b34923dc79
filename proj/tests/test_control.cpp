#include <doctest.h>

#include "compofun/control.hpp"
#include "util.hpp"

using namespace cf;
using testutil::in;
using testutil::mk;

namespace {

// quadratic model V(x,u) = 0.5 ||u - M x||^2 with ||M|| <= 1, d = q = 2
const double M[2][2] = {{0.48, 0.16}, {-0.24, 0.40}};

std::vector<double> Mx(const std::vector<double>& x) {
  return {M[0][0] * x[0] + M[0][1] * x[1], M[1][0] * x[0] + M[1][1] * x[1]};
}

double quad_cost(const std::vector<double>& x, const std::vector<double>& u) {
  auto m = Mx(x);
  return 0.5 * ((u[0] - m[0]) * (u[0] - m[0]) + (u[1] - m[1]) * (u[1] - m[1]));
}

ControlProblem quad_problem() {
  ControlProblem pb;
  pb.d = 2;
  pb.q = 2;
  pb.R = 1.0;
  pb.V = quad_cost;
  pb.u0 = {0, 0};
  pb.gamma = 1.0;
  pb.lambda_min = pb.lambda_max = 1.0;
  return pb;
}

// dx = u, one state, one control
CompositionalFunction integrator_field(double Rx, double Ru) {
  std::vector<NodeSpec> nodes = {
      in("x", Rx), in("u", Ru),
      mk("o", NodeKind::linear, "affine", {0, 0, 1}, 1, {"x", "u"}, Ru * 1.01),
  };
  return CompositionalFunction(2, 1, Rx, std::move(nodes));
}

// dx = a x + u
CompositionalFunction linear_field(double a, double Rx, double Ru) {
  std::vector<NodeSpec> nodes = {
      in("x", Rx), in("u", Ru),
      mk("o", NodeKind::linear, "affine", {0, a, 1}, 1, {"x", "u"},
         std::abs(a) * Rx + Ru + 1e-9),
  };
  return CompositionalFunction(2, 1, Rx, std::move(nodes));
}

// augmented LQ plant: state (x, w), dx = a x + u, dw = u^2
CompositionalFunction lq_field(double a) {
  std::vector<NodeSpec> nodes = {
      in("x", 2.0), in("w", 4.0), in("u", 1.5),
      mk("dx", NodeKind::linear, "affine", {0, a, 1}, 1, {"x", "u"}, 2.6),
      mk("dw", NodeKind::general, "power", {2}, 1, {"u"}, 1.5),
  };
  return CompositionalFunction(3, 2, 2.0, std::move(nodes));
}

// terminal cost c (z - zt)^2 + r w
CompositionalFunction lq_terminal(double c, double r, double zt) {
  std::vector<NodeSpec> nodes = {
      in("z", 3.0), in("w", 5.0),
      mk("s", NodeKind::linear, "affine", {-zt, 1}, 1, {"z"}, 3.0),
      mk("sq", NodeKind::general, "power", {2}, 2, {"s"}, 3.5),
      mk("J", NodeKind::linear, "affine", {0, c, r}, 3, {"sq", "w"}, 13.0),
  };
  return CompositionalFunction(2, 1, 3.0, std::move(nodes));
}

}  // namespace

TEST_CASE("contraction parameters on the unit-Hessian model are exact halves") {
  auto cp = contraction_params(1.0, 1.0);
  CHECK(cp.beta == 0.5);
  CHECK(cp.L == 0.5);
  // large eigenvalues: beta = 1/(2 lmax)
  auto cp2 = contraction_params(1.0, 4.0);
  CHECK(cp2.beta == doctest::Approx(0.125));
  CHECK(cp2.L == doctest::Approx(0.875));
  CHECK_THROWS_AS(contraction_params(0.0, 1.0), ConfigError);
}

TEST_CASE("finite_diff_grad bias follows the curvature bound") {
  CostFn V = [](const std::vector<double>&, const std::vector<double>& u) {
    return u[0] * u[0];
  };
  auto g = finite_diff_grad(V, {}, {1.0}, 0.1);
  CHECK(g[0] == doctest::Approx(2.1).epsilon(1e-12));  // bias 0.1 <= C1 h = 0.2

  CostFn lin = [](const std::vector<double>&, const std::vector<double>& u) {
    return 3 * u[0] - 1;
  };
  CHECK(finite_diff_grad(lin, {}, {0.4}, 0.5)[0] == doctest::Approx(3.0).epsilon(1e-12));

  // halving h halves the worst-case bias on the quadratic model
  auto pb = quad_problem();
  double worst1 = 0, worst2 = 0;
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> u = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto m = Mx(x);
    for (double h : {0.1, 0.05}) {
      auto g2 = finite_diff_grad(pb.V, x, u, h);
      double b = std::max(std::abs(g2[0] - (u[0] - m[0])), std::abs(g2[1] - (u[1] - m[1])));
      (h == 0.1 ? worst1 : worst2) = std::max(h == 0.1 ? worst1 : worst2, b);
    }
  }
  CHECK(worst2 == doctest::Approx(worst1 / 2).epsilon(1e-6));
}

TEST_CASE("psi_map: fixed point, K-step contraction, bad beta rejected") {
  auto pb = quad_problem();
  auto psi = psi_map(pb);
  CHECK(psi.beta() == doctest::Approx(0.5));

  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto ustar = Mx(x);
    auto fixed = psi(x, ustar);
    CHECK(fixed[0] == doctest::Approx(ustar[0]).epsilon(1e-8));
    CHECK(fixed[1] == doctest::Approx(ustar[1]).epsilon(1e-8));

    // K-step contraction from u0 = 0 with gamma = 1: error <= 2^-10
    std::vector<double> u = {0, 0};
    for (int k = 0; k < 10; ++k) u = psi(x, u);
    double err = std::hypot(u[0] - ustar[0], u[1] - ustar[1]);
    CHECK(err <= std::pow(2.0, -10) * (1 + 1e-6) + 1e-9);
  }

  CHECK_THROWS_AS(psi_map(pb, 3.0), ContractionError);
}

TEST_CASE("solve_optimal: thm7 bound grid and the exact-limit fixed point") {
  auto pb = quad_problem();
  Rng rng(23);
  for (int K : {5, 10, 20}) {
    for (double h : {1e-2, 1e-3}) {
      for (double e1 : {0.0, 1e-4}) {
        CostFn src = pb.V;
        if (e1 > 0)
          src = [e1](const std::vector<double>& x, const std::vector<double>& u) {
            return quad_cost(x, u) +
                   e1 * std::sin(3 * u[0] + 5 * u[1] + 2 * x[0] + x[1]);
          };
        double bound = thm7_bound(pb.gamma, 0.5, 1.0, pb.q, K, h, e1);
        for (int t = 0; t < 25; ++t) {
          std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
          auto u = solve_optimal(pb, src, x, K, h);
          auto m = Mx(x);
          double err = std::sqrt((u[0] - m[0]) * (u[0] - m[0]) +
                                 (u[1] - m[1]) * (u[1] - m[1]));
          CHECK(err <= bound);
        }
      }
    }
  }

  // exact cost, tiny h, many steps: converges to u* = Mx
  std::vector<double> x = {0.7, -0.4};
  auto u = solve_optimal(pb, pb.V, x, 40, 1e-6);
  auto m = Mx(x);
  CHECK(std::abs(u[0] - m[0]) <= 1e-6);
  CHECK(std::abs(u[1] - m[1]) <= 1e-6);

  CHECK(solve_optimal(pb, pb.V, x, 0, 1e-3) == pb.u0);

  auto tight = pb;
  tight.gamma = 0.01;
  CHECK_THROWS_AS(solve_optimal(tight, tight.V, x, 20, 1e-4), InvarianceError);
}

TEST_CASE("thm7_bound arithmetic and the optimal step helper") {
  double b = thm7_bound(1.0, 0.5, 2.0, 1, 10, 0.01, 1e-4);
  CHECK(b == doctest::Approx(std::pow(2.0, -10) + 0.2 + 0.2).epsilon(1e-12));

  double e1 = 1e-4, C1 = 2.0;
  double hstar = optimal_fd_step(e1, C1);
  auto two_terms = [&](double h) { return C1 * h + 2 * e1 / h; };
  for (double h : {hstar / 2, hstar * 0.9, hstar * 1.1, hstar * 2})
    CHECK(two_terms(hstar) <= two_terms(h) + 1e-15);
}

TEST_CASE("zoh_rollout: piecewise-constant integration and interval naming") {
  auto f = integrator_field(3.0, 2.0);
  auto x1 = zoh_rollout(f, {0.3}, {1.0, -1.0}, 2.0, 2, 4);
  CHECK(x1[0] == doctest::Approx(0.3).epsilon(1e-12));
  auto x2 = zoh_rollout(f, {0.5}, {0.0, 0.0, 0.0}, 3.0, 3, 2);
  CHECK(x2[0] == doctest::Approx(0.5).epsilon(1e-14));

  try {
    zoh_rollout(f, {2.0}, {1.9, 1.9}, 2.0, 2, 2);
    CHECK(false);
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("interval") != std::string::npos);
  }
}

TEST_CASE("linear-system rollout matches the closed form within the Euler bound") {
  double a = -0.5;
  auto f = linear_field(a, 2.0, 1.0);
  int sub = 20;
  double dt = 1.0;
  double A = 0.5 * 2 + 1, B = 0.5;
  double bound = A * std::exp(B * dt) * dt / sub;
  Rng rng(29);
  for (int t = 0; t < 100; ++t) {
    double x0 = rng.uniform(-1, 1), u = rng.uniform(-1, 1);
    double exact = std::exp(a * dt) * x0 + u / a * (std::exp(a * dt) - 1);
    auto y = zoh_rollout(f, {x0}, {u}, dt, 1, sub);
    CHECK(std::abs(y[0] - exact) <= bound);
  }
}

TEST_CASE("zoh_cost: hand rollout, constancy, and the cost graph equivalence") {
  auto f = integrator_field(3.0, 2.0);
  std::vector<NodeSpec> pn = {
      in("z", 3.5),
      mk("s", NodeKind::linear, "affine", {-0.8, 1}, 1, {"z"}, 3.5),
      mk("sq", NodeKind::general, "power", {2}, 2, {"s"}, 4.5),
  };
  CompositionalFunction Psi(1, 1, 3.5, std::move(pn));
  // x = 0, U = (1, -1): final state 0, J = zt^2
  CHECK(zoh_cost(Psi, f, {0.0}, {1.0, -1.0}, 2.0, 2) == doctest::Approx(0.64));

  auto J = zoh_cost_dag(Psi, f, 2.0, 2, 1);
  CHECK(J.d() == 3);
  CHECK(J.q() == 1);
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    double x = rng.uniform(-1, 1), u1 = rng.uniform(-0.8, 0.8), u2 = rng.uniform(-0.8, 0.8);
    double num = zoh_cost(Psi, f, {x}, {u1, u2}, 2.0, 2);
    CHECK(J.evaluate_unchecked({x, u1, u2})[0] == doctest::Approx(num).epsilon(1e-12));
  }

  // gradient of J in U agrees with a central-difference oracle within 2 C1 h
  CostFn Jn = [&](const std::vector<double>& x, const std::vector<double>& U) {
    return zoh_cost(Psi, f, x, U, 2.0, 2);
  };
  double h = 1e-3, C1 = 2.0;  // d2J/du^2 = 2 for this quadratic
  std::vector<double> x = {0.2}, U = {0.3, -0.1};
  auto g = finite_diff_grad(Jn, x, U, h);
  for (int j = 0; j < 2; ++j) {
    auto up = U, um = U;
    up[j] += h;
    um[j] -= h;
    double oracle = (Jn(x, up) - Jn(x, um)) / (2 * h);
    CHECK(std::abs(g[j] - oracle) <= 2 * C1 * h);
  }
}

TEST_CASE("thm8_pipeline: LQ schedule shape and oracle agreement") {
  Thm8Problem pb(lq_field(-0.5), lq_terminal(0.4, 0.5, 0.5));
  pb.T = 2.0;
  pb.N_t = 2;
  pb.D_radius = 1.0;
  pb.u0 = {0.0};
  pb.gamma = 0.3;

  Thm8Report r1, r2;
  auto solve1 = thm8_pipeline(pb, 0.1, {}, &r1);
  auto solve2 = thm8_pipeline(pb, 0.2, {}, &r2);
  CHECK(r2.K * 2 == r1.K);                                   // K ~ 1/eps
  CHECK(r2.h == doctest::Approx(4 * r1.h).epsilon(1e-12));   // h ~ eps^2
  CHECK(r1.complexity > r2.complexity);
  CHECK_FALSE(r1.budget_exceeded);
  CHECK(r1.L < 1);
  CHECK(r1.lambda_min > 0);

  // brute-force grid oracle over the control ball
  auto oracle = [&](double x) {
    double best = kInf;
    std::vector<double> bu = {0, 0};
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) {
        double u1 = -0.6 + 1.2 * i / 199.0, u2 = -0.6 + 1.2 * j / 199.0;
        double c = zoh_cost(pb.Psi, pb.f, {x, 0.0}, {u1, u2}, pb.T, pb.N_t);
        if (c < best) {
          best = c;
          bu = {u1, u2};
        }
      }
    return bu;
  };
  for (double x : {-0.8, 0.0, 0.6}) {
    auto U = solve1({x, 0.0});
    auto Ub = oracle(x);
    double err = std::sqrt((U[0] - Ub[0]) * (U[0] - Ub[0]) +
                           (U[1] - Ub[1]) * (U[1] - Ub[1]));
    CHECK(err <= 3 * 0.1);
  }
}
