#include "compofun/shallow.hpp"

#include <Eigen/Dense>

namespace cf {

namespace {

double act(const std::string& name, double s) {
  if (name == "tanh") return std::tanh(s);
  throw ConfigError("unsupported activation: " + name);
}

// frozen inner weights: unit directions with a geometric scale ladder and a
// shared bias where the activation's derivatives are all nonzero
void freeze_inner_weights(ShallowNet& net, uint64_t seed) {
  Rng rng(seed);
  net.w.assign(net.n, std::vector<double>(net.d, 0.0));
  net.b.assign(net.n, 0.0);
  // ridge units tanh(s (u . xt - t)): shifts spread over the box keep the
  // design matrix well conditioned, which keeps the fitted output
  // coefficients small and downstream re-association bit-stable
  // d = 1 keeps a near-linear unit in the span; higher d favors steeper
  // ridges so the solve does not have to cancel near-duplicates
  const double s_lo = net.d == 1 ? 0.02 : 0.1;
  const double s_hi = std::clamp(net.n / 4.0, 2.0, 8.0);
  for (int j = 0; j < net.n; ++j) {
    double t = net.n > 1 ? static_cast<double>(j) / (net.n - 1) : 0.5;
    double scale = s_lo * std::pow(s_hi / s_lo, t);
    double shift = 2.0 * halton(j + 1, 2) - 1.0;
    if (net.d == 1) {
      net.w[j][0] = (j % 2 == 0 ? 1.0 : -1.0) * scale;
    } else {
      double norm = 0;
      for (int k = 0; k < net.d; ++k) {
        net.w[j][k] = rng.normal();
        norm += net.w[j][k] * net.w[j][k];
      }
      norm = std::sqrt(std::max(norm, 1e-12));
      for (int k = 0; k < net.d; ++k) net.w[j][k] *= scale / norm;
    }
    double s_eff = 0;
    for (int k = 0; k < net.d; ++k) s_eff += std::abs(net.w[j][k]);
    net.b[j] = -s_eff * shift;
  }
}

std::vector<std::vector<double>> unit_grid(int d, int axis_points, int scatter,
                                           uint64_t halton_offset) {
  std::vector<std::vector<double>> pts;
  if (d == 1) {
    for (int i = 0; i < axis_points; ++i)
      pts.push_back({-1 + 2.0 * i / (axis_points - 1)});
  } else if (d == 2) {
    for (int i = 0; i < axis_points; ++i)
      for (int j = 0; j < axis_points; ++j)
        pts.push_back({-1 + 2.0 * i / (axis_points - 1), -1 + 2.0 * j / (axis_points - 1)});
  } else {
    for (int s = 0; s < scatter; ++s) {
      auto u = halton_point(halton_offset + s, d);
      for (auto& v : u) v = 2 * v - 1;
      pts.push_back(std::move(u));
    }
  }
  return pts;
}

double feature(const ShallowNet& net, int j, const std::vector<double>& xt) {
  double s = net.b[j];
  for (int k = 0; k < net.d; ++k) s += net.w[j][k] * xt[k];
  return act(net.activation, s);
}

}  // namespace

double ShallowNet::evaluate(const std::vector<double>& x) const {
  std::vector<double> xt(d);
  for (int k = 0; k < d; ++k) xt[k] = (x[k] - center[k]) / radius[k];
  double s = 0;
  for (int j = 0; j < n; ++j) s += a[j] * feature(*this, j, xt);
  return s;
}

ShallowNet fit_shallow_target(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> center, std::vector<double> radius,
                              int n_width, const FitCfg& cfg, double* sup_error) {
  if (center.size() != radius.size() || center.empty())
    throw ShapeError("fit_shallow_target: bad domain box");
  ShallowNet net;
  net.n = n_width;
  net.d = static_cast<int>(center.size());
  net.center = std::move(center);
  net.radius = std::move(radius);
  freeze_inner_weights(net, cfg.seed);

  auto denorm = [&](const std::vector<double>& xt) {
    std::vector<double> x(net.d);
    for (int k = 0; k < net.d; ++k) x[k] = net.center[k] + net.radius[k] * xt[k];
    return x;
  };

  auto train = unit_grid(net.d, cfg.train_axis, cfg.train_scatter, 0);
  const int N = static_cast<int>(train.size());
  Eigen::MatrixXd Phi(N, net.n);
  Eigen::VectorXd y(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < net.n; ++j) Phi(i, j) = feature(net, j, train[i]);
    y(i) = f(denorm(train[i]));
  }

  // thresholded SVD on the design matrix itself: normal equations square the
  // conditioning, and the minimum-norm solution keeps the output coefficients
  // small enough that downstream re-association stays bit-stable
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  Eigen::VectorXd coef = svd.solve(y);
  if (!coef.allFinite()) {
    Eigen::MatrixXd G = Phi.transpose() * Phi;
    Eigen::VectorXd rhs = Phi.transpose() * y;
    double lambda = cfg.ridge;
    for (;;) {
      Eigen::MatrixXd A = G;
      for (int j = 0; j < net.n; ++j) A(j, j) += lambda;
      coef = A.ldlt().solve(rhs);
      if (coef.allFinite() || lambda > 1.0) break;
      lambda *= 10;
    }
  }
  net.a.assign(net.n, 0.0);
  for (int j = 0; j < net.n; ++j) net.a[j] = coef(j);

  if (sup_error) {
    int axis = (cfg.train_axis - 1) * cfg.measure_factor + 1;
    auto probe = unit_grid(net.d, axis, cfg.train_scatter * cfg.measure_factor,
                           uint64_t{1} << 20);
    double sup = 0;
    for (const auto& xt : probe) {
      auto x = denorm(xt);
      sup = std::max(sup, std::abs(net.evaluate(x) - f(x)));
    }
    *sup_error = sup;
  }
  return net;
}

std::pair<ShallowNet, double> fit_shallow(const NodeSpec& node, int n_width,
                                          const FitCfg& cfg) {
  if (node.kind == NodeKind::input)
    throw ShapeError("fit_shallow: input nodes carry no function");
  const Primitive& pr = primitive(node.prim);
  int d = static_cast<int>(node.inputs.size());
  auto target = [&pr, params = node.params](const std::vector<double>& z) {
    return pr.eval(params, z);
  };
  double err = 0;
  auto net = fit_shallow_target(target, std::vector<double>(d, 0.0),
                                std::vector<double>(d, node.R_ij), n_width, cfg, &err);
  return {std::move(net), err};
}

CompositionalFunction to_dag(const ShallowNet& net) {
  std::vector<NodeSpec> nodes;
  double rmax = 0;
  for (int k = 0; k < net.d; ++k) {
    NodeSpec n;
    n.id = "in" + std::to_string(k);
    n.kind = NodeKind::input;
    n.layer = 0;
    n.R_ij = (std::abs(net.center[k]) + net.radius[k]) * (1 + 1e-9) + 1e-12;
    rmax = std::max(rmax, n.R_ij);
    nodes.push_back(std::move(n));
  }
  for (int j = 0; j < net.n; ++j) {
    NodeSpec n;
    n.id = "h" + std::to_string(j);
    n.kind = NodeKind::neuron;
    n.prim = "neuron_tanh";
    n.layer = 1;
    // absorb the per-axis normalization xt = (x - c) / r
    double b = net.b[j];
    n.params.push_back(0.0);
    for (int k = 0; k < net.d; ++k) {
      double wk = net.w[j][k] / net.radius[k];
      b -= net.w[j][k] * net.center[k] / net.radius[k];
      n.params.push_back(wk);
      n.inputs.push_back({"in" + std::to_string(k), k});
    }
    n.params[0] = b;
    n.R_ij = 1.1 * rmax + 1e-9;
    nodes.push_back(std::move(n));
  }
  NodeSpec out;
  out.id = "out";
  out.kind = NodeKind::linear;
  out.prim = "affine";
  out.layer = 2;
  out.params.push_back(0.0);
  for (int j = 0; j < net.n; ++j) {
    out.params.push_back(net.a[j]);
    out.inputs.push_back({"h" + std::to_string(j), j});
  }
  out.R_ij = 1.1;  // tanh outputs live in (-1, 1)
  nodes.push_back(std::move(out));
  return CompositionalFunction(net.d, 1, rmax, std::move(nodes));
}

CompositionalFunction assemble_deep(const CompositionalFunction& f,
                                    const std::map<std::string, ShallowNet>& nets) {
  std::vector<const NodeSpec*> general;
  for (const auto& n : f.nodes())
    if (n.kind == NodeKind::general) general.push_back(&n);
  std::sort(general.begin(), general.end(),
            [](const NodeSpec* a, const NodeSpec* b) { return a->layer > b->layer; });

  CompositionalFunction out = f;
  for (const NodeSpec* n : general) {
    auto it = nets.find(n->id);
    if (it == nets.end())
      throw ConfigError("assemble_deep: no net supplied for general node " + n->id);
    out = substitute_node(out, n->id, to_dag(it->second), 0);
  }
  return out;
}

bool is_neural_network(const CompositionalFunction& f) {
  for (const auto& n : f.nodes()) {
    if (n.kind == NodeKind::input) {
      if (n.layer != 0) return false;
    } else if (n.layer == f.l_max()) {
      if (n.kind != NodeKind::linear && n.kind != NodeKind::identity) return false;
    } else {
      if (n.kind != NodeKind::neuron) return false;
    }
  }
  return true;
}

int neuron_count(const CompositionalFunction& f) {
  int c = 0;
  for (const auto& n : f.nodes()) c += n.kind == NodeKind::neuron;
  return c;
}

namespace {

struct OperandRanges {
  std::vector<Interval> out1, out2;
};

OperandRanges output_ranges(const CompositionalFunction& f1,
                            const CompositionalFunction& f2) {
  OperandRanges r;
  auto iv1 = ranges_with_fallback(f1), iv2 = ranges_with_fallback(f2);
  for (const auto& id : f1.output_ids()) r.out1.push_back(iv1[f1.node_index(id)]);
  for (const auto& id : f2.output_ids()) r.out2.push_back(iv2[f2.node_index(id)]);
  return r;
}

}  // namespace

CompositionalFunction product_net(const CompositionalFunction& f1nn,
                                  const CompositionalFunction& f2nn, int n_width,
                                  const FitCfg& cfg, PairNetReport* report) {
  if (f1nn.q() != f2nn.q()) throw ShapeError("product_net: output dimensions differ");
  int q = f1nn.q();
  auto rr = output_ranges(f1nn, f2nn);

  // psi(u, v) = u^T v with one product node per component
  std::vector<NodeSpec> psi_nodes;
  std::vector<double> box(2 * q);
  for (int k = 0; k < q; ++k) {
    box[k] = 1.05 * rr.out1[k].absmax() + 1e-9;
    box[q + k] = 1.05 * rr.out2[k].absmax() + 1e-9;
  }
  for (int k = 0; k < 2 * q; ++k) {
    NodeSpec n;
    n.id = std::string(k < q ? "u" : "v") + std::to_string(k % q);
    n.kind = NodeKind::input;
    n.layer = 0;
    n.R_ij = box[k];
    psi_nodes.push_back(std::move(n));
  }
  double sum_r = 0;
  for (int k = 0; k < q; ++k) {
    NodeSpec n;
    n.id = "p" + std::to_string(k);
    n.kind = NodeKind::general;
    n.prim = "product";
    n.layer = 1;
    n.inputs = {{"u" + std::to_string(k), 0}, {"v" + std::to_string(k), 1}};
    n.R_ij = 1.05 * std::max(box[k], box[q + k]) + 1e-9;
    n.m_ij = 2;
    sum_r += n.R_ij * n.R_ij;
    psi_nodes.push_back(std::move(n));
  }
  NodeSpec sum;
  sum.id = "sum";
  sum.kind = NodeKind::linear;
  sum.prim = "affine";
  sum.layer = 2;
  sum.params.push_back(0.0);
  for (int k = 0; k < q; ++k) {
    sum.params.push_back(1.0);
    sum.inputs.push_back({"p" + std::to_string(k), k});
  }
  sum.R_ij = 1.1 * sum_r + 1e-9;
  psi_nodes.push_back(std::move(sum));
  double Rpsi = *std::max_element(box.begin(), box.end());
  CompositionalFunction psi(2 * q, 1, Rpsi, std::move(psi_nodes));

  std::map<std::string, ShallowNet> nets;
  double e_psi = 0;
  for (int k = 0; k < q; ++k) {
    auto [net, err] = fit_shallow(psi.node("p" + std::to_string(k)), n_width, cfg);
    e_psi += err;  // the downstream sum has unit coefficients
    nets.emplace("p" + std::to_string(k), std::move(net));
  }
  auto psinn = assemble_deep(psi, nets);

  if (report) {
    report->e_psi = e_psi;
    for (int k = 0; k < q; ++k) {
      report->A.push_back(rr.out1[k].absmax());
      report->B.push_back(rr.out2[k].absmax());
      report->Rj.push_back(std::max(rr.out1[k].absmax(), rr.out2[k].absmax()));
    }
  }
  return compose(psinn, stack(f1nn, f2nn), 64);
}

CompositionalFunction quotient_net(const CompositionalFunction& f1nn,
                                   const CompositionalFunction& f2nn, int n_width,
                                   const FitCfg& cfg, PairNetReport* report) {
  if (f1nn.q() != 1 || f2nn.q() != 1)
    throw ShapeError("quotient_net needs scalar-output operands");
  auto rr = output_ranges(f1nn, f2nn);
  Interval u = rr.out1[0], v = rr.out2[0];
  if (v.contains(0.0))
    throw DivisionSafetyError("quotient_net: denominator range includes zero");

  // off-center fit box around the operand ranges
  double cu = (u.lo + u.hi) / 2, ru = 1.05 * (u.hi - u.lo) / 2 + 1e-9;
  double cv = (v.lo + v.hi) / 2, rv = 1.02 * (v.hi - v.lo) / 2 + 1e-12;
  if (Interval{cv - rv, cv + rv}.contains(0.0))
    throw DivisionSafetyError("quotient_net: padded denominator box touches zero");

  double err = 0;
  auto net = fit_shallow_target(
      [](const std::vector<double>& z) { return z[0] / z[1]; }, {cu, cv}, {ru, rv},
      n_width, cfg, &err);
  if (report) {
    report->e_psi = err;
    report->A = {u.absmax()};
    report->B = {std::min(std::abs(v.lo), std::abs(v.hi))};
    report->Rj = {std::max(ru, rv)};
  }
  return compose(to_dag(net), stack(f1nn, f2nn), 64);
}

}  // namespace cf
