#include "compofun/ode.hpp"

#include <cmath>
#include <set>

namespace cf {

namespace {

std::string fresh_id(const std::set<std::string>& used, const std::string& base) {
  if (!used.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + "~" + std::to_string(k);
    if (!used.count(cand)) return cand;
  }
}

}  // namespace

CompositionalFunction euler_step(const CompositionalFunction& f, double h) {
  if (f.d() != f.q())
    throw ShapeError("euler_step needs a self-map, got d=" + std::to_string(f.d()) +
                     " q=" + std::to_string(f.q()));
  if (!(h > 0)) throw ConfigError("euler_step: step size must be positive");

  auto ranges = ranges_with_fallback(f);
  auto radii = f.input_radii();
  std::vector<NodeSpec> nodes = f.nodes();
  std::set<std::string> used;
  for (const auto& n : nodes) used.insert(n.id);

  int top = f.l_max() + 1;
  for (int k = 0; k < f.d(); ++k) {
    NodeSpec n;
    n.id = fresh_id(used, "elr" + std::to_string(k));
    used.insert(n.id);
    n.kind = NodeKind::linear;
    n.prim = "affine";
    n.params = {0.0, 1.0, h};
    n.layer = top;
    n.inputs = {{f.input_ids()[k], 0}, {f.output_ids()[k], 1}};
    double dom = std::max(radii[k], ranges[f.node_index(f.output_ids()[k])].absmax());
    n.R_ij = dom * (1 + 1e-9) + 1e-12;
    nodes.push_back(std::move(n));
  }
  return CompositionalFunction(f.d(), f.d(), f.R(), std::move(nodes));
}

CompositionalFunction euler_flow(const CompositionalFunction& f, double T, int K) {
  if (K < 1) throw ConfigError("euler_flow: K must be at least 1");
  if (!(T > 0)) throw ConfigError("euler_flow: horizon must be positive");
  auto step = euler_step(f, T / K);
  long long total = static_cast<long long>(K) * static_cast<long long>(step.nodes().size());
  if (total > 1000000)
    throw ConfigError("euler_flow: unrolled graph would hold " + std::to_string(total) +
                      " nodes; use flow_map instead");
  // domain escapes surface at evaluation time, per iterate, so the unrolled
  // composition itself skips the sampled compatibility check
  CompositionalFunction acc = step;
  for (int k = 2; k <= K; ++k) acc = compose(step, acc, 0);
  return acc;
}

CompositionalFunction flow_net(const CompositionalFunction& fnn, double T, int K) {
  return euler_flow(fnn, T, K);
}

FlowMap::FlowMap(CompositionalFunction step, double T, int K)
    : step_(std::move(step)), T_(T), K_(K) {
  if (K_ < 1) throw ConfigError("flow map: K must be at least 1");
  if (step_.d() != step_.q()) throw ShapeError("flow map: the step must be a self-map");
}

std::vector<double> FlowMap::evaluate(const std::vector<double>& x) const {
  std::vector<double> v = x;
  for (int k = 0; k < K_; ++k) {
    try {
      v = step_.evaluate(v);
    } catch (const Error& e) {
      throw DomainError("flow iterate " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return v;
}

std::vector<double> FlowMap::evaluate_unchecked(const std::vector<double>& x) const {
  std::vector<double> v = x;
  for (int k = 0; k < K_; ++k) v = step_.evaluate_unchecked(v);
  return v;
}

FlowMap flow_map(const CompositionalFunction& f, double T, int K) {
  if (K < 1) throw ConfigError("flow map: K must be at least 1");
  if (!(T > 0)) throw ConfigError("flow map: horizon must be positive");
  return FlowMap(euler_step(f, T / K), T, K);
}

OdeConstants estimate_ode_constants(const CompositionalFunction& f, double p, int samples,
                                    uint64_t seed) {
  if (f.d() != f.q()) throw ShapeError("ode constants need a self-map");
  Rng rng(seed ^ 0x0dec0dedULL);
  auto radii = f.input_radii();
  int d = f.d();
  OdeConstants out;
  out.alpha = -kInf;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> x(d);
    // keep finite-difference stencils inside the box
    for (int k = 0; k < d; ++k) x[k] = rng.uniform(-0.999 * radii[k], 0.999 * radii[k]);
    auto fx = f.evaluate_unchecked(x);
    out.A = std::max(out.A, pnorm(fx, p));

    std::vector<std::vector<double>> J(d, std::vector<double>(d));
    for (int k = 0; k < d; ++k) {
      double h = 1e-5 * radii[k];
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      auto fp = f.evaluate_unchecked(xp), fm = f.evaluate_unchecked(xm);
      for (int i = 0; i < d; ++i) J[i][k] = (fp[i] - fm[i]) / (2 * h);
    }
    if (p == kInf) {
      double bnorm = 0, mu = -kInf;
      for (int i = 0; i < d; ++i) {
        double row = 0, offdiag = 0;
        for (int k = 0; k < d; ++k) {
          row += std::abs(J[i][k]);
          if (k != i) offdiag += std::abs(J[i][k]);
        }
        bnorm = std::max(bnorm, row);
        mu = std::max(mu, J[i][i] + offdiag);
      }
      out.B = std::max(out.B, bnorm);
      out.alpha = std::max(out.alpha, mu);
    } else {
      // generic p: fall back to the Frobenius bound, a valid over-estimate
      double fro = 0;
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) fro += J[i][k] * J[i][k];
      fro = std::sqrt(fro);
      out.B = std::max(out.B, fro);
      out.alpha = std::max(out.alpha, fro);
    }
  }
  // the logarithmic norm never exceeds the Jacobian norm
  out.alpha = std::min(out.alpha, out.B);
  return out;
}

Thm4Result thm4_bound(const Features& ft, double A, double B, double alpha, double T,
                      int n_width, double C1) {
  if (ft.empty) throw ConfigError("flow bound needs a nonempty feature set");
  if (!(T > 0) || n_width < 1) throw ConfigError("flow bound: T > 0 and n_width >= 1");
  Thm4Result out;
  double growth = std::max(std::exp(alpha * T), 1.0);
  out.C = C1 * growth * T * ft.L_max * ft.Lambda * ft.n_general + A * std::exp(B * T) * T;
  out.bound = out.C * std::pow(n_width, -1.0 / ft.r_max);
  out.complexity = static_cast<long long>(
      std::ceil((std::pow(n_width, 1.0 / ft.r_max) + 1) * n_width * ft.n_general));
  return out;
}

int default_flow_steps(const Features& ft, int n_width) {
  if (ft.empty) throw ConfigError("flow steps need a nonempty feature set");
  return static_cast<int>(std::ceil(std::pow(n_width, 1.0 / ft.r_max) - 1e-12));
}

CompositionalFunction make_lorenz96(int d, double F, double R) {
  if (d < 4) throw ShapeError("cyclic system needs d >= 4, the index offsets collide");
  if (!(R > 0)) throw ConfigError("domain radius must be positive");
  auto x = [&](int i) {
    int j = ((i - 1) % d + d) % d + 1;
    return "x" + std::to_string(j);
  };
  std::vector<NodeSpec> nodes;
  for (int i = 1; i <= d; ++i) {
    NodeSpec n;
    n.id = x(i);
    n.kind = NodeKind::input;
    n.layer = 0;
    n.R_ij = R;
    nodes.push_back(std::move(n));
  }
  for (int i = 1; i <= d; ++i) {
    NodeSpec n;
    n.id = "z" + std::to_string(i);
    n.kind = NodeKind::linear;
    n.prim = "affine";
    n.params = {0.0, 1.0, -1.0};
    n.layer = 1;
    n.inputs = {{x(i + 1), 0}, {x(i - 2), 1}};
    n.R_ij = R;
    nodes.push_back(std::move(n));
  }
  for (int i = 1; i <= d; ++i) {
    NodeSpec n;
    n.id = "p" + std::to_string(i);
    n.kind = NodeKind::general;
    n.prim = "product";
    n.layer = 2;
    n.inputs = {{x(i - 1), 0}, {"z" + std::to_string(i), 1}};
    n.R_ij = 2 * R;
    n.m_ij = 2;
    nodes.push_back(std::move(n));
  }
  for (int i = 1; i <= d; ++i) {
    NodeSpec n;
    n.id = "o" + std::to_string(i);
    n.kind = NodeKind::linear;
    n.prim = "affine";
    n.params = {F, -1.0, 1.0};
    n.layer = 3;
    n.inputs = {{x(i), 0}, {"p" + std::to_string(i), 1}};
    n.R_ij = std::max(R, 2 * R * R);
    nodes.push_back(std::move(n));
  }
  return CompositionalFunction(d, d, R, std::move(nodes));
}

}  // namespace cf
