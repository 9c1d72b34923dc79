// Acceptance harness: one PASS/FAIL line per criterion, exit code = number of
// failures.  All tolerances are pinned here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "compofun/control.hpp"
#include "compofun/experiments.hpp"
#include "compofun/features.hpp"
#include "compofun/ode.hpp"
#include "util.hpp"

using namespace cf;
using testutil::in;
using testutil::mk;

namespace {

int failures = 0;

void line(int idx, const std::string& desc, bool ok, const std::string& detail = "") {
  std::printf("%s criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", idx, desc.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++failures;
}

bool passed(const ExperimentReport& rep, const std::string& name) {
  for (const auto& a : rep.assertions)
    if (a.name == name) return a.pass;
  return false;
}

bool passed_prefix(const ExperimentReport& rep, const std::string& prefix) {
  bool any = false, ok = true;
  for (const auto& a : rep.assertions)
    if (a.name.rfind(prefix, 0) == 0) {
      any = true;
      ok = ok && a.pass;
    }
  return any && ok;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;

  // ---- random-DAG audit backs criteria 1, 2, 3 and 10 ----
  auto t0 = clock::now();
  AuditConfig ac;  // 50 DAGs, 100 oracle points, 1e4 perturbation points
  auto audit = run_audit(ac);
  double audit_s = seconds_since(t0);

  bool ops_ok = true;
  for (const char* op :
       {"linear_combine_oracle", "inner_product_oracle", "divide_oracle", "compose_oracle",
        "substitute_node_oracle", "truncate_oracle"})
    ops_ok = ops_ok && passed(audit, op);
  line(1, "operation oracles match to 1e-12 on 50 random DAGs, under 1 min",
       ops_ok && audit_s < 60.0,
       "audit runtime " + std::to_string(audit_s) + " s");

  line(2, "measured perturbation deviation within the propagated bound, 50/50 DAGs",
       passed(audit, "perturbation_bound_sound"));

  line(3, "iterated-map error bound sound and factor-3 tight for L = 0.5 and L = 2",
       passed_prefix(audit, "iterated_bound_"));

  // ---- cyclic system features, exact values and d-independence ----
  t0 = clock::now();
  bool feat_ok = true;
  std::string feat_detail;
  for (int d : {4, 8, 16}) {
    auto ft = extract_features(make_lorenz96(d, 8.0, 1.0));
    bool one = ft.r_max == 1.0 && ft.Lambda == 28.0 && ft.L_max == 1.0 && ft.n_general == d;
    if (!one)
      feat_detail += "d=" + std::to_string(d) + " got (" + std::to_string(ft.r_max) + "," +
                     std::to_string(ft.Lambda) + "," + std::to_string(ft.L_max) + "," +
                     std::to_string(ft.n_general) + ") ";
    feat_ok = feat_ok && one;
  }
  double feat_s = seconds_since(t0);
  line(4, "features exactly (1, 28, 1, d) for d in {4, 8, 16}, under 10 s",
       feat_ok && feat_s < 10.0, feat_detail);

  // ---- node sensitivities: exact value 1 plus the 5% sampling margin ----
  {
    auto f = make_lorenz96(4, 8.0, 1.0);
    bool ok = true;
    for (const auto& n : f.nodes()) {
      if (n.kind != NodeKind::general) continue;
      double L = node_lipschitz(f, n.id);
      ok = ok && L >= 1.0 && L <= 1.05;
    }
    line(5, "general-node sensitivities in [1.0, 1.05]", ok);
  }

  // ---- assembled deep network dominance ----
  {
    auto approx = run_approx({});
    bool ok = passed_prefix(approx, "assembled_error_bounded_n") &&
              passed_prefix(approx, "neuron_count_n") &&
              passed(approx, "error_decreases_with_width");
    line(6, "assembled error within the propagated bound, 4n neurons, shrinking with width",
         ok);
  }

  // ---- explicit Euler flow on the scalar decay field ----
  {
    std::vector<NodeSpec> nodes = {
        in("x", 1.0), mk("o", NodeKind::linear, "affine", {0, -1}, 1, {"x"}, 1.01)};
    CompositionalFunction f(1, 1, 1.0, std::move(nodes));
    auto flow = euler_flow(f, 1.0, 10);

    double delta = 1e-3;
    std::vector<NodeSpec> pnodes = {
        in("x", 1.0), mk("o", NodeKind::linear, "affine", {delta, -1}, 1, {"x"}, 1.01)};
    CompositionalFunction fp(1, 1, 1.0, std::move(pnodes));
    auto flowp = euler_flow(fp, 1.0, 10);
    double chained = iterate_error_bound(0.9, 10, 0.1 * delta, 0.0);

    double c = std::pow(0.9, 10);
    bool ok = std::abs(c - std::exp(-1.0)) <= std::exp(1.0) * 0.1;  // A e^{BT} T / K
    for (int t = 0; t < 50 && ok; ++t) {
      double x0 = -1.0 + 2.0 * t / 49.0;
      ok = ok && std::abs(flow.evaluate_unchecked({x0})[0] - c * x0) <= 1e-12;
      double drift = std::abs(flowp.evaluate_unchecked({x0})[0] -
                              flow.evaluate_unchecked({x0})[0]);
      ok = ok && drift <= chained * (1 + 1e-9);
    }
    line(7, "Euler flow exact to 1e-12, global and chained per-step bounds hold", ok);
  }

  // ---- contraction solver on the quadratic model ----
  {
    const double M[2][2] = {{0.48, 0.16}, {-0.24, 0.40}};
    auto Mx = [&](const std::vector<double>& x) {
      return std::vector<double>{M[0][0] * x[0] + M[0][1] * x[1],
                                 M[1][0] * x[0] + M[1][1] * x[1]};
    };
    CostFn V = [&](const std::vector<double>& x, const std::vector<double>& u) {
      auto m = Mx(x);
      return 0.5 * ((u[0] - m[0]) * (u[0] - m[0]) + (u[1] - m[1]) * (u[1] - m[1]));
    };
    ControlProblem pb;
    pb.d = 2;
    pb.q = 2;
    pb.V = V;
    pb.u0 = {0, 0};
    pb.lambda_min = pb.lambda_max = 1.0;

    auto cp = contraction_params(1.0, 1.0);
    bool ok = cp.beta == 0.5 && cp.L == 0.5;

    Rng rng(23);
    for (int K : {5, 10, 20})
      for (double h : {1e-2, 1e-3})
        for (double e1 : {0.0, 1e-4}) {
          CostFn src = V;
          if (e1 > 0)
            src = [&, e1](const std::vector<double>& x, const std::vector<double>& u) {
              return V(x, u) + e1 * std::sin(3 * u[0] + 5 * u[1] + 2 * x[0] + x[1]);
            };
          double bound = thm7_bound(pb.gamma, 0.5, 1.0, pb.q, K, h, e1);
          for (int t = 0; t < 25; ++t) {
            std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            auto u = solve_optimal(pb, src, x, K, h);
            auto m = Mx(x);
            double err = std::hypot(u[0] - m[0], u[1] - m[1]);
            ok = ok && err <= bound;
          }
        }
    std::vector<double> x = {0.7, -0.4};
    auto u = solve_optimal(pb, pb.V, x, 40, 1e-6);
    auto m = Mx(x);
    ok = ok && std::abs(u[0] - m[0]) <= 1e-6 && std::abs(u[1] - m[1]) <= 1e-6;
    line(8, "beta = L = 1/2 exactly, descent error within the bound on the full grid", ok);
  }

  // ---- scheduled pipeline on the LQ benchmark ----
  {
    t0 = clock::now();
    auto pb = lq_benchmark_problem();
    Thm8Report r1, r2;
    thm8_pipeline(pb, 0.1, {}, &r1);
    thm8_pipeline(pb, 0.2, {}, &r2);
    bool sched = r2.K * 2 == r1.K && std::abs(r2.h - 4 * r1.h) <= 1e-12 * r2.h &&
                 !r1.budget_exceeded && !r2.budget_exceeded;

    OptctlConfig oc;
    oc.eps = {0.1, 0.05};
    auto rep = run_optctl(oc);
    bool within = passed_prefix(rep, "control_error_within_3eps_");
    double lq_s = seconds_since(t0);
    line(9, "pipeline within 3 eps of the grid oracle, K ~ 1/eps and h ~ eps^2, under 5 min",
         sched && within && lq_s < 300.0,
         "runtime " + std::to_string(lq_s) + " s");
  }

  line(10, "identity insertion and merge preserve evaluation; merged graphs are networks",
       passed(audit, "insert_identity_preserves") && passed(audit, "merge_preserves") &&
           passed(audit, "merge_yields_network"));

  return failures;
}
