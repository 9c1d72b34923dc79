#include "compofun/features.hpp"

namespace cf {

namespace {

bool truncation_is_affine(const CompositionalFunction& fbar) {
  for (const auto& n : fbar.nodes()) {
    if (n.kind == NodeKind::input) continue;
    if (!primitive(n.prim).linear) return false;
  }
  return true;
}

std::vector<double> box_point_halton(uint64_t idx, const std::vector<double>& radii) {
  auto u = halton_point(idx, static_cast<int>(radii.size()));
  for (size_t k = 0; k < radii.size(); ++k) u[k] = (2 * u[k] - 1) * radii[k];
  return u;
}

}  // namespace

double node_lipschitz(const CompositionalFunction& f, const std::string& node_id,
                      double p, const SampleCfg& cfg) {
  const NodeSpec& n = f.node(node_id);
  if (n.layer >= f.l_max())
    throw ShapeError("node " + node_id + " is in the output layer; no truncation exists");
  auto tr = truncate(f, n.layer);
  int j = -1;
  for (size_t k = 0; k < tr.dummy_ids.size(); ++k)
    if (tr.dummy_ids[k] == node_id) j = static_cast<int>(k);
  if (j < 0)
    // the node feeds nothing above its layer; perturbing it cannot move f
    return 0.0;

  const auto& fbar = tr.fbar;
  auto radii = fbar.input_radii();
  double Rj = radii[j];

  if (truncation_is_affine(fbar)) {
    std::vector<double> z0(fbar.d(), 0.0), z1(fbar.d(), 0.0);
    z1[j] = Rj;
    auto a = fbar.evaluate_unchecked(z0), b = fbar.evaluate_unchecked(z1);
    std::vector<double> g(fbar.q());
    for (int k = 0; k < fbar.q(); ++k) g[k] = (b[k] - a[k]) / Rj;
    return pnorm(g, p);
  }

  double h = std::max(Rj * 1e-4, 1e-10);
  auto quotient = [&](std::vector<double> z) {
    z[j] = std::clamp(z[j], -radii[j] + h, radii[j] - h);
    auto zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    auto a = fbar.evaluate_unchecked(zp), b = fbar.evaluate_unchecked(zm);
    std::vector<double> g(fbar.q());
    for (int k = 0; k < fbar.q(); ++k) g[k] = (a[k] - b[k]) / (2 * h);
    return pnorm(g, p);
  };

  double best = 0;
  std::vector<double> best_z(fbar.d(), 0.0);
  for (int s = 0; s < cfg.coarse; ++s) {
    auto z = box_point_halton(s, radii);
    double v = quotient(z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  Rng rng(cfg.seed ^ 0x11bull);
  double sigma = 0.1;
  auto z = best_z;
  for (int s = 0; s < cfg.refine; ++s) {
    auto cand = z;
    for (int k = 0; k < fbar.d(); ++k) {
      cand[k] = std::clamp(cand[k] + sigma * radii[k] * rng.normal(), -radii[k], radii[k]);
    }
    double v = quotient(cand);
    if (v > best) {
      best = v;
      z = cand;
    }
    sigma *= 0.97;
  }
  return best * (1 + cfg.margin);
}

namespace {

// all multi-indices over d axes with |k| = order
void multi_indices(int d, int order, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(order);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int v = 0; v <= order; ++v) {
    cur.push_back(v);
    multi_indices(d, order - v, cur, out);
    cur.pop_back();
  }
}

double deriv_any_order(const Primitive& pr, const std::vector<double>& params,
                       std::vector<double> z, std::vector<int> k, double h) {
  int total = 0;
  for (int v : k) total += v;
  if (total <= pr.deriv_depth) return pr.deriv(params, z, k);
  int axis = -1;
  for (size_t a = 0; a < k.size(); ++a)
    if (k[a] > 0) {
      axis = static_cast<int>(a);
      break;
    }
  k[axis]--;
  auto zp = z, zm = z;
  zp[axis] += h;
  zm[axis] -= h;
  return (deriv_any_order(pr, params, zp, k, h) - deriv_any_order(pr, params, zm, k, h)) /
         (2 * h);
}

std::vector<std::vector<double>> node_domain_grid(int d, double R, const GridCfg& cfg) {
  std::vector<std::vector<double>> pts;
  if (d == 1) {
    for (int i = 0; i < cfg.axis_points; ++i)
      pts.push_back({-R + 2 * R * i / (cfg.axis_points - 1)});
  } else if (d == 2) {
    for (int i = 0; i < cfg.axis_points; ++i)
      for (int j = 0; j < cfg.axis_points; ++j)
        pts.push_back({-R + 2 * R * i / (cfg.axis_points - 1),
                       -R + 2 * R * j / (cfg.axis_points - 1)});
  } else {
    std::vector<double> radii(d, R);
    for (int s = 0; s < cfg.scatter; ++s) pts.push_back(box_point_halton(s, radii));
    // corner sweep keeps boundary extrema visible
    if (d <= 12)
      for (uint64_t mask = 0; mask < (uint64_t{1} << d); ++mask) {
        std::vector<double> x(d);
        for (int k = 0; k < d; ++k) x[k] = (mask >> k & 1) ? R : -R;
        pts.push_back(std::move(x));
      }
  }
  return pts;
}

}  // namespace

double sobolev_norm(const NodeSpec& node, int m, const GridCfg& cfg) {
  if (node.kind == NodeKind::input)
    throw ShapeError("sobolev_norm: input nodes carry no function");
  const Primitive& pr = primitive(node.prim);
  int d = static_cast<int>(node.inputs.size());
  if (d == 0) throw ShapeError("sobolev_norm: node " + node.id + " has no inputs");
  double R = node.R_ij;
  double h = std::max(R * 1e-4, 1e-10);
  auto pts = node_domain_grid(d, R, cfg);

  double total = 0;
  for (int order = 0; order <= m; ++order) {
    std::vector<std::vector<int>> ks;
    std::vector<int> cur;
    multi_indices(d, order, cur, ks);
    double order_max = 0;
    for (const auto& k : ks) {
      double sup = 0;
      for (const auto& z : pts)
        sup = std::max(sup, std::abs(deriv_any_order(pr, node.params, z, k, h)));
      order_max = std::max(order_max, sup);
    }
    total += order_max;
  }
  return total;
}

Features extract_features(const CompositionalFunction& f, double p, const SampleCfg& cfg,
                          const GridCfg& grid) {
  Features ft;
  ft.p = p;
  for (const auto& n : f.nodes()) {
    if (n.kind != NodeKind::general) continue;
    PerNodeFeature pf;
    pf.id = n.id;
    pf.d_ij = static_cast<int>(n.inputs.size());
    pf.m_ij = n.m_ij;
    pf.R_ij = n.R_ij;
    pf.L_ij = n.layer == f.l_max() ? 1.0 : node_lipschitz(f, n.id, p, cfg);
    pf.sobolev = sobolev_norm(n, n.m_ij, grid);
    ft.per_node.push_back(std::move(pf));
  }
  ft.n_general = static_cast<int>(ft.per_node.size());
  if (ft.n_general == 0) return ft;  // empty marker
  ft.empty = false;
  for (const auto& pf : ft.per_node) {
    ft.r_max = std::max(ft.r_max, static_cast<double>(pf.d_ij) / pf.m_ij);
    ft.Lambda = std::max(ft.Lambda, std::max(std::pow(pf.R_ij, pf.m_ij), 1.0) * pf.sobolev);
    ft.L_max = std::max(ft.L_max, pf.L_ij);
  }
  return ft;
}

double propagate_errors(const CompositionalFunction& f,
                        const std::map<std::string, double>& node_errors, double p,
                        const SampleCfg& cfg) {
  double bound = 0;
  for (const auto& [id, eps] : node_errors) {
    const NodeSpec& n = f.node(id);
    if (n.kind == NodeKind::input)
      throw ShapeError("propagate_errors: " + id + " is an input node");
    double L = n.layer == f.l_max() ? 1.0 : node_lipschitz(f, id, p, cfg);
    bound += L * eps;
  }
  return bound;
}

double iterate_error_bound(double L_f, int K, double e1, double e2,
                           std::optional<double> L_h, std::optional<double> e3) {
  double geo = std::abs(L_f - 1) < 1e-12 ? static_cast<double>(K)
                                         : (std::pow(L_f, K) - 1) / (L_f - 1);
  if (L_h) return *L_h * geo * e1 + e3.value_or(0.0);
  return geo * e1 + std::pow(L_f, K) * e2;
}

double thm2_bound(const Features& ft, int n_width, double C1) {
  if (ft.empty) throw ConfigError("thm2_bound: the function has no general nodes");
  return C1 * ft.L_max * ft.Lambda * ft.n_general * std::pow(n_width, -1.0 / ft.r_max);
}

double thm2_refined_bound(const Features& ft, int n_width,
                          const std::map<std::string, double>& C_ij) {
  if (ft.empty) throw ConfigError("thm2_refined_bound: the function has no general nodes");
  double sum = 0;
  for (const auto& pf : ft.per_node) {
    auto it = C_ij.find(pf.id);
    double c = it == C_ij.end() ? 1.0 : it->second;
    sum += pf.L_ij * c * std::max(std::pow(pf.R_ij, pf.m_ij), 1.0) * pf.sobolev *
           std::pow(n_width, -static_cast<double>(pf.m_ij) / pf.d_ij);
  }
  return sum;
}

ComplexityBound complexity_for_tolerance(const Features& ft, double eps, double C) {
  if (ft.empty) throw ConfigError("complexity_for_tolerance: no general nodes");
  if (!(eps > 0)) throw ConfigError("complexity_for_tolerance: eps must be positive");
  double r = ft.r_max;
  ComplexityBound out;
  out.n_width = static_cast<long long>(
      std::ceil(std::pow(C * ft.L_max * ft.Lambda * ft.n_general / eps, r)));
  out.neurons = static_cast<long long>(
      std::ceil(C * std::pow(ft.L_max * ft.Lambda, r) * std::pow(ft.n_general, r + 1) *
                std::pow(eps, -r)));
  return out;
}

double calibrate_c1(const Features& ft, const std::vector<std::pair<int, double>>& runs) {
  if (ft.empty) throw ConfigError("calibrate_c1: no general nodes");
  double c1 = 0;
  for (const auto& [n, err] : runs)
    c1 = std::max(c1, err / (ft.L_max * ft.Lambda * ft.n_general *
                             std::pow(n, -1.0 / ft.r_max)));
  return c1;
}

double thm5_product_lambda(const std::vector<double>& A, const std::vector<double>& B,
                           const std::vector<double>& Rj, int m) {
  if (A.size() != B.size() || A.size() != Rj.size())
    throw ShapeError("thm5_product_lambda: mismatched component bounds");
  double lam = 0;
  for (size_t j = 0; j < A.size(); ++j)
    lam = std::max(lam, std::max(std::pow(Rj[j], m), 1.0) *
                            (A[j] * B[j] + A[j] + B[j] + 2));
  return lam;
}

double thm5_product_bound(double max_f_norm2, double max_g_norm2, double e1, double e2,
                          double C, double Lambda, int q, int n_width, int m) {
  return max_f_norm2 * e2 + max_g_norm2 * e1 + e1 * e2 +
         C * Lambda * q * std::pow(n_width, -m / 2.0);
}

double thm5_quotient_lambda(double A, double B, double R1, int m) {
  double fact = 1;
  for (int i = 2; i <= m; ++i) fact *= i;
  double geo = std::abs(B - 1) < 1e-12
                   ? m + 1.0
                   : (1 - std::pow(1.0 / B, m + 1)) / (B - 1);
  return std::max(std::pow(R1, m), 1.0) * fact * (A + B) * geo;
}

double thm5_quotient_bound(double A, double B, double e1, double e2, double C,
                           double Lambda, int n_width, int m) {
  if (e2 > B / 2)
    throw ConfigError("thm5_quotient_bound: denominator error exceeds half its lower bound");
  return 2 * A / (B * B) * e2 + 2 / B * e1 + C * Lambda * std::pow(n_width, -m / 2.0);
}

}  // namespace cf
