#include "compofun/control.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>

#include "compofun/shallow.hpp"

namespace cf {

namespace {

double ball_norm(const std::vector<double>& u, const std::vector<double>& u0) {
  double s = 0;
  for (size_t j = 0; j < u.size(); ++j) s += (u[j] - u0[j]) * (u[j] - u0[j]);
  return std::sqrt(s);
}

// uniform point in the ||u - u0||_2 <= rad ball
std::vector<double> sample_ball(Rng& rng, const std::vector<double>& u0, double rad) {
  int q = static_cast<int>(u0.size());
  std::vector<double> u(q);
  double n2 = 0;
  for (int j = 0; j < q; ++j) {
    u[j] = rng.normal();
    n2 += u[j] * u[j];
  }
  double r = rad * std::pow(rng.uniform(0, 1), 1.0 / q) / std::sqrt(std::max(n2, 1e-300));
  for (int j = 0; j < q; ++j) u[j] = u0[j] + r * u[j];
  return u;
}

Eigen::MatrixXd fd_hessian(const CostFn& V, const std::vector<double>& x,
                           const std::vector<double>& u, double h) {
  int q = static_cast<int>(u.size());
  Eigen::MatrixXd H(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = i; j < q; ++j) {
      auto a = u, b = u, c = u, d = u;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      c[i] -= h; c[j] += h;
      d[i] -= h; d[j] -= h;
      double v = (V(x, a) - V(x, b) - V(x, c) + V(x, d)) / (4 * h * h);
      H(i, j) = H(j, i) = v;
    }
  return H;
}

}  // namespace

ContractionParams contraction_params(double lambda_min, double lambda_max) {
  if (!(lambda_min > 0) || lambda_max < lambda_min)
    throw ConfigError("contraction needs 0 < lambda_min <= lambda_max");
  double denom = std::max(1.0, 2 * lambda_max);
  return {1.0 / denom, 1.0 - lambda_min / denom};
}

HessianBounds estimate_hessian_bounds(const CostFn& V, int d, int q, double R,
                                      const std::vector<double>& u0, double gamma,
                                      int points, uint64_t seed) {
  if (points < 1) throw ConfigError("hessian estimate needs at least one sample point");
  Rng rng(seed ^ 0x4e55ULL);
  double lo = kInf, hi = -kInf;
  for (int t = 0; t < std::max(points, 20); ++t) {
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k) x[k] = rng.uniform(-R, R);
    auto u = sample_ball(rng, u0, 2 * gamma);
    auto H = fd_hessian(V, x, u, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    lo = std::min(lo, eig.eigenvalues().minCoeff());
    hi = std::max(hi, eig.eigenvalues().maxCoeff());
  }
  // 10% safety margins on both ends
  return {lo > 0 ? 0.9 * lo : lo, hi > 0 ? 1.1 * hi : hi};
}

std::vector<double> finite_diff_grad(const CostFn& V, const std::vector<double>& x,
                                     const std::vector<double>& u, double h) {
  if (!(h > 0)) throw ConfigError("forward difference needs h > 0");
  double base = V(x, u);
  std::vector<double> g(u.size());
  for (size_t j = 0; j < u.size(); ++j) {
    auto up = u;
    up[j] += h;
    g[j] = (V(x, up) - base) / h;
  }
  return g;
}

PsiMap::PsiMap(CostFn V, double beta, double grad_h)
    : V_(std::move(V)), beta_(beta), grad_h_(grad_h) {}

std::vector<double> PsiMap::operator()(const std::vector<double>& x,
                                       const std::vector<double>& u) const {
  std::vector<double> out = u;
  for (size_t j = 0; j < u.size(); ++j) {
    auto up = u, um = u;
    up[j] += grad_h_;
    um[j] -= grad_h_;
    out[j] -= beta_ * (V_(x, up) - V_(x, um)) / (2 * grad_h_);
  }
  return out;
}

PsiMap psi_map(const ControlProblem& pb, double beta, double grad_h, int check_samples,
               uint64_t seed) {
  double lmin = pb.lambda_min, lmax = pb.lambda_max;
  if (!(lmin > 0)) {
    auto hb = estimate_hessian_bounds(pb.V, pb.d, pb.q, pb.R, pb.u0, pb.gamma, 20, seed);
    lmin = hb.lambda_min;
    lmax = hb.lambda_max;
  }
  auto cp = contraction_params(lmin, lmax);
  if (beta <= 0) beta = cp.beta;
  double L_exp = std::max(std::abs(1 - beta * lmin), std::abs(1 - beta * lmax));
  if (!(L_exp < 1))
    throw ContractionError("step size beta=" + std::to_string(beta) +
                           " gives contraction factor " + std::to_string(L_exp));

  PsiMap psi(pb.V, beta, grad_h);
  Rng rng(seed ^ 0xc047ULL);
  for (int t = 0; t < check_samples; ++t) {
    std::vector<double> x(pb.d);
    for (int k = 0; k < pb.d; ++k) x[k] = rng.uniform(-pb.R, pb.R);
    auto u = sample_ball(rng, pb.u0, 2 * pb.gamma);
    auto v = sample_ball(rng, pb.u0, 2 * pb.gamma);
    double duv = ball_norm(u, v);
    if (duv < 1e-9) continue;
    double dpsi = ball_norm(psi(x, u), psi(x, v));
    if (dpsi > L_exp * duv * (1 + 1e-6) + 1e-12)
      throw ContractionError("sampled pair contracts by " + std::to_string(dpsi / duv) +
                             ", expected at most " + std::to_string(L_exp));
  }
  return psi;
}

std::vector<double> solve_optimal(const ControlProblem& pb, const CostFn& Vsource,
                                  const std::vector<double>& x, int K, double h) {
  if (K < 0) throw ConfigError("iteration count must be nonnegative");
  std::vector<double> u = pb.u0;
  if (K == 0) return u;
  double lmin = pb.lambda_min, lmax = pb.lambda_max;
  if (!(lmin > 0)) {
    auto hb = estimate_hessian_bounds(Vsource, pb.d, pb.q, pb.R, pb.u0, pb.gamma);
    lmin = hb.lambda_min;
    lmax = hb.lambda_max;
  }
  double beta = contraction_params(lmin, lmax).beta;
  for (int k = 1; k <= K; ++k) {
    auto g = finite_diff_grad(Vsource, x, u, h);
    for (int j = 0; j < static_cast<int>(u.size()); ++j) u[j] -= beta * g[j];
    if (ball_norm(u, pb.u0) > 2 * pb.gamma * (1 + 1e-9))
      throw InvarianceError("iteration " + std::to_string(k) +
                            " left the control ball; gamma or the eigenvalue bounds "
                            "are too small");
  }
  return u;
}

double thm7_bound(double gamma, double L, double C1, int q, int K, double h, double e1) {
  if (!(L > 0) || !(L < 1) || K < 1 || !(h > 0) || e1 < 0)
    throw ConfigError("thm7 bound needs 0 < L < 1, K >= 1, h > 0, e1 >= 0");
  double sq = std::sqrt(static_cast<double>(q));
  return gamma * std::pow(L, K) + C1 * sq * K * h + 2 * sq * K * e1 / h;
}

double optimal_fd_step(double e1, double C1) {
  if (!(C1 > 0) || e1 < 0) throw ConfigError("optimal step needs C1 > 0, e1 >= 0");
  return std::sqrt(2 * e1 / C1);
}

std::vector<double> zoh_rollout(const CompositionalFunction& f, std::vector<double> x,
                                const std::vector<double>& U, double T, int N_t,
                                int substeps) {
  int d = f.q(), q = f.d() - f.q();
  if (q < 1) throw ShapeError("dynamics must have more inputs than outputs");
  if (static_cast<int>(U.size()) != q * N_t)
    throw ShapeError("control vector length must be q * N_t");
  if (static_cast<int>(x.size()) != d) throw ShapeError("state length must match f");
  if (N_t < 1 || substeps < 1 || !(T > 0))
    throw ConfigError("rollout needs N_t >= 1, substeps >= 1, T > 0");
  double h = T / N_t / substeps;
  for (int k = 0; k < N_t; ++k) {
    std::vector<double> xu(d + q);
    for (int s = 0; s < substeps; ++s) {
      std::copy(x.begin(), x.end(), xu.begin());
      std::copy(U.begin() + k * q, U.begin() + (k + 1) * q, xu.begin() + d);
      try {
        auto dx = f.evaluate(xu);
        for (int i = 0; i < d; ++i) x[i] += h * dx[i];
      } catch (const Error& e) {
        throw DomainError("interval " + std::to_string(k + 1) + ": " + e.what());
      }
    }
  }
  return x;
}

double zoh_cost(const CompositionalFunction& Psi, const CompositionalFunction& f,
                const std::vector<double>& x, const std::vector<double>& U, double T,
                int N_t, int substeps) {
  return Psi.evaluate(zoh_rollout(f, x, U, T, N_t, substeps))[0];
}

CompositionalFunction zoh_cost_dag(const CompositionalFunction& Psi,
                                   const CompositionalFunction& f, double T, int N_t,
                                   int substeps) {
  int d = f.q(), q = f.d() - f.q();
  if (q < 1) throw ShapeError("dynamics must have more inputs than outputs");
  if (Psi.q() != 1 || Psi.d() != d)
    throw ShapeError("terminal cost must map the state to a scalar");
  if (N_t < 1 || substeps < 1 || !(T > 0))
    throw ConfigError("cost graph needs N_t >= 1, substeps >= 1, T > 0");
  double h = T / N_t / substeps;
  auto fr = f.input_radii();
  auto ranges = ranges_with_fallback(f);

  auto x_id = [](int i) { return "x" + std::to_string(i + 1); };
  auto u_id = [&](int k, int j) {
    return "u" + std::to_string(k + 1) + "_" + std::to_string(j + 1);
  };

  // one augmented Euler substep (x, U) -> (x + h f(x, u_k), U)
  auto make_step = [&](int k, const std::string& tag) {
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < d; ++i) {
      NodeSpec n;
      n.id = x_id(i);
      n.kind = NodeKind::input;
      n.layer = 0;
      n.R_ij = fr[i];
      nodes.push_back(std::move(n));
    }
    for (int a = 0; a < N_t; ++a)
      for (int j = 0; j < q; ++j) {
        NodeSpec n;
        n.id = u_id(a, j);
        n.kind = NodeKind::input;
        n.layer = 0;
        n.R_ij = fr[d + j];
        nodes.push_back(std::move(n));
      }
    auto mapped = [&](const std::string& src) {
      for (int i = 0; i < f.d(); ++i)
        if (f.input_ids()[i] == src) return i < d ? x_id(i) : u_id(k, i - d);
      return src + tag;
    };
    for (const auto& n : f.nodes()) {
      if (n.kind == NodeKind::input) continue;
      NodeSpec c = n;
      c.id = n.id + tag;
      for (auto& e : c.inputs) e.src = mapped(e.src);
      nodes.push_back(std::move(c));
    }
    int top = f.l_max() + 1;
    for (int i = 0; i < d; ++i) {
      NodeSpec n;
      n.id = "xo" + std::to_string(i + 1) + tag;
      n.kind = NodeKind::linear;
      n.prim = "affine";
      n.params = {0.0, 1.0, h};
      n.layer = top;
      n.inputs = {{x_id(i), 0}, {f.output_ids()[i] + tag, 1}};
      double dom = std::max(fr[i], ranges[f.node_index(f.output_ids()[i])].absmax());
      n.R_ij = dom * (1 + 1e-9) + 1e-12;
      nodes.push_back(std::move(n));
    }
    for (int a = 0; a < N_t; ++a)
      for (int j = 0; j < q; ++j) {
        NodeSpec n;
        n.id = "uo" + std::to_string(a + 1) + "_" + std::to_string(j + 1) + tag;
        n.kind = NodeKind::identity;
        n.prim = "identity";
        n.layer = top;
        n.inputs = {{u_id(a, j), 0}};
        n.R_ij = fr[d + j] * (1 + 1e-9) + 1e-12;
        nodes.push_back(std::move(n));
      }
    return CompositionalFunction(d + q * N_t, d + q * N_t, f.R(), std::move(nodes));
  };

  std::optional<CompositionalFunction> chain;
  for (int k = 0; k < N_t; ++k)
    for (int s = 0; s < substeps; ++s) {
      auto step = make_step(k, "@" + std::to_string(k * substeps + s + 1));
      chain = chain ? compose(step, *chain, 0) : step;
    }

  // terminal stage: Psi on the state block, controls ignored
  auto pr = Psi.input_radii();
  std::vector<NodeSpec> pn;
  for (int i = 0; i < d; ++i) {
    NodeSpec n;
    n.id = x_id(i);
    n.kind = NodeKind::input;
    n.layer = 0;
    n.R_ij = pr[i];
    pn.push_back(std::move(n));
  }
  for (int a = 0; a < N_t; ++a)
    for (int j = 0; j < q; ++j) {
      NodeSpec n;
      n.id = u_id(a, j);
      n.kind = NodeKind::input;
      n.layer = 0;
      n.R_ij = fr[d + j];
      pn.push_back(std::move(n));
    }
  auto pmapped = [&](const std::string& src) {
    for (int i = 0; i < d; ++i)
      if (Psi.input_ids()[i] == src) return x_id(i);
    return src + "@psi";
  };
  for (const auto& n : Psi.nodes()) {
    if (n.kind == NodeKind::input) continue;
    NodeSpec c = n;
    c.id = n.id + "@psi";
    for (auto& e : c.inputs) e.src = pmapped(e.src);
    pn.push_back(std::move(c));
  }
  CompositionalFunction terminal(d + q * N_t, 1, f.R(), std::move(pn));
  return compose(terminal, *chain, 0);
}

std::function<std::vector<double>(const std::vector<double>&)> thm8_pipeline(
    const Thm8Problem& pb, double eps, const Thm8Config& cfg, Thm8Report* report) {
  int d = pb.f.q(), q = pb.f.d() - pb.f.q();
  if (static_cast<int>(pb.u0.size()) != q)
    throw ShapeError("base control must have length q");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  double dt = pb.T / pb.N_t;
  if (dt > 2) throw ConfigError("interval length T / N_t must be at most 2");
  int qN = q * pb.N_t;

  Thm8Report rep;
  rep.eps = eps;
  rep.K = static_cast<int>(std::ceil(cfg.Cbar1 / eps));
  rep.h = cfg.Cbar2 * eps * eps / std::sqrt(static_cast<double>(qN));
  rep.e1_target = cfg.Cbar3 * std::pow(eps, 4) / qN;

  auto J = zoh_cost_dag(pb.Psi, pb.f, pb.T, pb.N_t, cfg.substeps);
  auto jr = J.input_radii();

  // sample box: initial states in D, controls across their declared boxes
  auto sample_point = [&](uint64_t idx) {
    std::vector<double> p(J.d());
    auto hp = halton_point(idx + 11, J.d());
    for (int i = 0; i < J.d(); ++i) {
      double r = i < d ? std::min(pb.D_radius, jr[i]) : jr[i];
      p[i] = (2 * hp[i] - 1) * 0.999 * r;
    }
    return p;
  };

  // escalate widths until the fitted cost meets the e1 target
  std::optional<CompositionalFunction> Jnn;
  for (int w : cfg.widths) {
    std::map<std::string, ShallowNet> nets;
    FitCfg fc;
    fc.seed = cfg.seed + 1;
    for (const auto& n : J.nodes()) {
      if (n.kind != NodeKind::general) continue;
      nets.emplace(n.id, fit_shallow(n, w, fc).first);
    }
    auto cand = assemble_deep(J, nets);
    double e1 = 0;
    for (int t = 0; t < cfg.e1_samples; ++t) {
      auto p = sample_point(t);
      e1 = std::max(e1, std::abs(J.evaluate_unchecked(p)[0] -
                                 cand.evaluate_unchecked(p)[0]));
    }
    e1 *= 1.05;
    rep.n_width = w;
    rep.e1_achieved = e1;
    Jnn = std::move(cand);
    if (e1 <= rep.e1_target) break;
  }
  rep.budget_exceeded = rep.e1_achieved > rep.e1_target;
  rep.complexity = 2ll * neuron_count(*Jnn) * qN * rep.K;

  // contraction parameters from the exact cost's sampled Hessian
  std::vector<double> U0;
  for (int a = 0; a < pb.N_t; ++a) U0.insert(U0.end(), pb.u0.begin(), pb.u0.end());
  CostFn exact = [&pb, &cfg](const std::vector<double>& x, const std::vector<double>& U) {
    return zoh_cost(pb.Psi, pb.f, x, U, pb.T, pb.N_t, cfg.substeps);
  };
  auto hb = estimate_hessian_bounds(exact, d, qN, pb.D_radius, U0, pb.gamma,
                                    cfg.hessian_points, cfg.seed);
  if (!(hb.lambda_min > 0))
    throw ConfigError("sampled cost Hessian is not positive definite");
  auto cp = contraction_params(hb.lambda_min, hb.lambda_max);
  rep.lambda_min = hb.lambda_min;
  rep.lambda_max = hb.lambda_max;
  rep.beta = cp.beta;
  rep.L = cp.L;
  if (cfg.C1 > 0) {
    rep.C1 = cfg.C1;
  } else {
    double diag = 0;
    Rng rng(cfg.seed ^ 0xd1a6ULL);
    for (int t = 0; t < cfg.hessian_points; ++t) {
      std::vector<double> x(d);
      for (int k = 0; k < d; ++k) x[k] = rng.uniform(-pb.D_radius, pb.D_radius);
      auto H = fd_hessian(exact, x, sample_ball(rng, U0, 2 * pb.gamma), 1e-4);
      diag = std::max(diag, H.diagonal().maxCoeff());
    }
    rep.C1 = 1.1 * diag;
  }
  if (report) *report = rep;

  ControlProblem inner;
  inner.d = d;
  inner.q = qN;
  inner.R = pb.D_radius;
  inner.u0 = U0;
  inner.gamma = pb.gamma;
  inner.lambda_min = hb.lambda_min;
  inner.lambda_max = hb.lambda_max;
  auto net = std::make_shared<CompositionalFunction>(std::move(*Jnn));
  int K = rep.K;
  double h = rep.h;
  CostFn netcost = [net, d, qN](const std::vector<double>& x,
                                const std::vector<double>& U) {
    std::vector<double> p;
    p.reserve(d + qN);
    p.insert(p.end(), x.begin(), x.end());
    p.insert(p.end(), U.begin(), U.end());
    return net->evaluate_unchecked(p)[0];
  };
  return [inner, netcost, K, h](const std::vector<double>& x) {
    return solve_optimal(inner, netcost, x, K, h);
  };
}

}  // namespace cf
