#include "compofun/algebra.hpp"

#include <unordered_set>

namespace cf {

namespace {

std::string uniquify(std::unordered_set<std::string>& used, const std::string& base) {
  std::string id = base;
  int k = 1;
  while (!used.insert(id).second) id = base + "~" + std::to_string(k++);
  return id;
}

double safe_radius(std::initializer_list<Interval> ivs) {
  double m = 0;
  for (const Interval& iv : ivs) m = std::max(m, iv.absmax());
  return 1.1 * m + 1e-9;
}

// union of the two operand graphs over f1's input nodes; f2's non-input nodes
// are renamed on collision
struct MergedOperands {
  std::vector<NodeSpec> nodes;
  std::vector<std::string> out1, out2;
  std::unordered_set<std::string> used;
};

MergedOperands merge_operands(const CompositionalFunction& f1,
                              const CompositionalFunction& f2) {
  if (f1.d() != f2.d()) throw ShapeError("operands have different input dimensions");
  auto r1 = f1.input_radii(), r2 = f2.input_radii();
  for (int k = 0; k < f1.d(); ++k)
    if (std::abs(r1[k] - r2[k]) > 1e-12 * std::max(1.0, r1[k]))
      throw CompatibilityError("operands have different input domains");

  MergedOperands M;
  for (const auto& n : f1.nodes()) {
    M.used.insert(n.id);
    M.nodes.push_back(n);
  }
  std::unordered_map<std::string, std::string> ren;
  for (int k = 0; k < f2.d(); ++k) ren[f2.input_ids()[k]] = f1.input_ids()[k];
  for (const auto& n : f2.nodes()) {
    if (n.kind == NodeKind::input) continue;
    ren[n.id] = uniquify(M.used, n.id);
  }
  for (const auto& n : f2.nodes()) {
    if (n.kind == NodeKind::input) continue;
    NodeSpec c = n;
    c.id = ren[n.id];
    for (auto& e : c.inputs) e.src = ren[e.src];
    M.nodes.push_back(std::move(c));
  }
  M.out1 = f1.output_ids();
  for (const auto& id : f2.output_ids()) M.out2.push_back(ren[id]);
  return M;
}

}  // namespace

std::vector<Interval> ranges_with_fallback(const CompositionalFunction& f) {
  auto iv = interval_ranges(f);
  bool all_finite = true;
  for (const auto& i : iv) all_finite &= i.finite();
  if (all_finite) return iv;

  Rng rng(0x5eedull);
  std::vector<Interval> seen(iv.size(), {kInf, -kInf});
  for (int s = 0; s < 2048; ++s) {
    auto x = sample_domain(f, rng);
    auto val = f.node_values(x);
    for (size_t i = 0; i < val.size(); ++i) {
      seen[i].lo = std::min(seen[i].lo, val[i]);
      seen[i].hi = std::max(seen[i].hi, val[i]);
    }
  }
  for (size_t i = 0; i < iv.size(); ++i) {
    if (iv[i].finite()) continue;
    double half = (seen[i].hi - seen[i].lo) / 2, mid = (seen[i].hi + seen[i].lo) / 2;
    iv[i] = {mid - 1.1 * half - 1e-9, mid + 1.1 * half + 1e-9};
  }
  return iv;
}

CompositionalFunction linear_combine(const CompositionalFunction& f1,
                                     const CompositionalFunction& f2, double a, double b) {
  if (f1.q() != f2.q()) throw ShapeError("linear_combine: output dimensions differ");
  auto M = merge_operands(f1, f2);
  auto iv1 = ranges_with_fallback(f1), iv2 = ranges_with_fallback(f2);
  int L = std::max(f1.l_max(), f2.l_max()) + 1;
  for (int k = 0; k < f1.q(); ++k) {
    NodeSpec o;
    o.id = uniquify(M.used, "lc" + std::to_string(k));
    o.kind = NodeKind::linear;
    o.prim = "affine";
    o.params = {0.0, a, b};
    o.layer = L;
    o.inputs = {{M.out1[k], 0}, {M.out2[k], 1}};
    o.R_ij = safe_radius({iv1[f1.node_index(f1.output_ids()[k])],
                          iv2[f2.node_index(f2.output_ids()[k])]});
    M.nodes.push_back(std::move(o));
  }
  return CompositionalFunction(f1.d(), f1.q(), f1.R(), std::move(M.nodes));
}

CompositionalFunction inner_product(const CompositionalFunction& f1,
                                    const CompositionalFunction& f2) {
  if (f1.q() != f2.q()) throw ShapeError("inner_product: output dimensions differ");
  auto M = merge_operands(f1, f2);
  auto iv1 = ranges_with_fallback(f1), iv2 = ranges_with_fallback(f2);
  double rmax = 0;
  for (int k = 0; k < f1.q(); ++k) {
    rmax = std::max(rmax, safe_radius({iv1[f1.node_index(f1.output_ids()[k])]}));
    rmax = std::max(rmax, safe_radius({iv2[f2.node_index(f2.output_ids()[k])]}));
  }
  NodeSpec o;
  o.id = uniquify(M.used, "dot");
  o.kind = NodeKind::general;
  o.prim = "dot";
  o.layer = std::max(f1.l_max(), f2.l_max()) + 1;
  for (int k = 0; k < f1.q(); ++k) o.inputs.push_back({M.out1[k], k});
  for (int k = 0; k < f1.q(); ++k) o.inputs.push_back({M.out2[k], f1.q() + k});
  o.R_ij = rmax;
  M.nodes.push_back(std::move(o));
  return CompositionalFunction(f1.d(), 1, f1.R(), std::move(M.nodes));
}

CompositionalFunction divide(const CompositionalFunction& f1,
                             const CompositionalFunction& f2) {
  if (f1.q() != 1 || f2.q() != 1) throw ShapeError("divide needs scalar-output operands");
  auto M = merge_operands(f1, f2);

  // sampled denominator certificate: constant sign, bounded away from zero
  Rng rng(0xd1ull);
  double vmin = kInf, vmax = -kInf, amin = kInf;
  auto radii = f2.input_radii();
  auto probe = [&](const std::vector<double>& x) {
    double v = f2.evaluate_unchecked(x)[0];
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    amin = std::min(amin, std::abs(v));
  };
  for (int s = 0; s < 4096; ++s) probe(sample_domain(f2, rng));
  if (f2.d() <= 12) {
    for (uint64_t mask = 0; mask < (uint64_t{1} << f2.d()); ++mask) {
      std::vector<double> x(f2.d());
      for (int k = 0; k < f2.d(); ++k) x[k] = (mask >> k & 1) ? radii[k] : -radii[k];
      probe(x);
    }
  }
  if (vmin <= 0 && vmax >= 0)
    throw DivisionSafetyError("denominator changes sign on the sampled domain");
  if (amin <= 1e-12)
    throw DivisionSafetyError("denominator not bounded away from zero on samples");

  auto iv1 = ranges_with_fallback(f1), iv2 = ranges_with_fallback(f2);
  NodeSpec o;
  o.id = uniquify(M.used, "quot");
  o.kind = NodeKind::general;
  o.prim = "quotient";
  o.layer = std::max(f1.l_max(), f2.l_max()) + 1;
  o.inputs = {{M.out1[0], 0}, {M.out2[0], 1}};
  o.R_ij = safe_radius({iv1[f1.node_index(f1.output_ids()[0])],
                        iv2[f2.node_index(f2.output_ids()[0])]});
  M.nodes.push_back(std::move(o));
  return CompositionalFunction(f1.d(), 1, f1.R(), std::move(M.nodes));
}

CompositionalFunction substitute_node(const CompositionalFunction& f,
                                      const std::string& node_id,
                                      const CompositionalFunction& g, int check_samples) {
  const NodeSpec& tgt = f.node(node_id);
  if (tgt.kind == NodeKind::input) throw ShapeError("cannot substitute an input node");
  if (g.q() != 1) throw ShapeError("replacement must have scalar output");
  if (g.d() != static_cast<int>(tgt.inputs.size()))
    throw ShapeError("replacement input dimension " + std::to_string(g.d()) +
                     " does not match the node's " + std::to_string(tgt.inputs.size()));

  int i = tgt.layer;
  int src_max = 0;
  for (const auto& e : tgt.inputs) src_max = std::max(src_max, f.node(e.src).layer);
  int di = i - src_max;
  int lg = g.l_max();
  int up = std::max(0, lg - di);

  if (check_samples > 0) {
    Rng rng(0x5ull);
    std::vector<double> g_radii;
    for (const auto& id : g.input_ids()) g_radii.push_back(g.node(id).R_ij);
    auto cons = f.consumers(node_id);
    for (int s = 0; s < check_samples; ++s) {
      auto x = sample_domain(f, rng);
      auto val = f.node_values(x);
      std::vector<double> z;
      for (size_t k = 0; k < tgt.inputs.size(); ++k) {
        double v = val[f.node_index(tgt.inputs[k].src)];
        if (std::abs(v) > g_radii[k])
          throw CompatibilityError("substitute_node: source value escapes the replacement's "
                                   "input domain at slot " + std::to_string(k));
        z.push_back(v);
      }
      double out = g.evaluate_unchecked(z)[0];
      for (const auto& cid : cons)
        if (!(std::abs(out) < f.node(cid).R_ij))
          throw CompatibilityError("substitute_node: replacement range escapes the domain of "
                                   "consumer " + cid);
    }
  }

  std::unordered_set<std::string> used;
  for (const auto& n : f.nodes())
    if (n.id != node_id) used.insert(n.id);
  used.insert(node_id);  // reserved for g's output node

  std::unordered_map<std::string, std::string> ren;  // g id -> new id
  for (int k = 0; k < g.d(); ++k) ren[g.input_ids()[k]] = tgt.inputs[k].src;
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::input) continue;
    ren[n.id] = (n.id == g.output_ids()[0]) ? node_id : uniquify(used, n.id);
  }

  std::vector<NodeSpec> nodes;
  for (const auto& n : f.nodes()) {
    if (n.id == node_id) {
      // splice the replacement in place so declared (and thus output) order of
      // the surrounding nodes is preserved
      for (const auto& gn : g.nodes()) {
        if (gn.kind == NodeKind::input) continue;
        NodeSpec c = gn;
        c.id = ren[gn.id];
        for (auto& e : c.inputs) e.src = ren[e.src];
        c.layer =
            (gn.id == g.output_ids()[0]) ? std::max(i, i - di + lg) : gn.layer + i - di;
        nodes.push_back(std::move(c));
      }
      continue;
    }
    NodeSpec c = n;
    if (c.layer >= i) c.layer += up;
    nodes.push_back(std::move(c));
  }
  return CompositionalFunction(f.d(), f.q(), f.R(), std::move(nodes));
}

CompositionalFunction compose(const CompositionalFunction& g, const CompositionalFunction& f,
                              int check_samples) {
  if (f.q() != g.d())
    throw ShapeError("compose: inner output dimension " + std::to_string(f.q()) +
                     " does not match outer input dimension " + std::to_string(g.d()));
  if (check_samples > 0) {
    Rng rng(0xc0ull);
    std::vector<double> g_radii;
    for (const auto& id : g.input_ids()) g_radii.push_back(g.node(id).R_ij);
    for (int s = 0; s < check_samples; ++s) {
      auto y = f.evaluate_unchecked(sample_domain(f, rng));
      for (int k = 0; k < g.d(); ++k)
        if (!(std::abs(y[k]) < g_radii[k]))
          throw CompatibilityError("compose: inner range escapes outer domain at output " +
                                   std::to_string(k));
    }
  }

  std::unordered_set<std::string> used;
  std::vector<NodeSpec> nodes;
  for (const auto& n : f.nodes()) {
    used.insert(n.id);
    nodes.push_back(n);
  }
  std::unordered_map<std::string, std::string> ren;
  for (int k = 0; k < g.d(); ++k) ren[g.input_ids()[k]] = f.output_ids()[k];
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::input) continue;
    ren[n.id] = uniquify(used, n.id);
  }
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::input) continue;
    NodeSpec c = n;
    c.id = ren[n.id];
    for (auto& e : c.inputs) e.src = ren[e.src];
    c.layer = n.layer + f.l_max();
    nodes.push_back(std::move(c));
  }
  return CompositionalFunction(f.d(), g.q(), f.R(), std::move(nodes));
}

CompositionalFunction stack(const CompositionalFunction& f1, const CompositionalFunction& f2) {
  auto M = merge_operands(f1, f2);
  auto iv1 = ranges_with_fallback(f1), iv2 = ranges_with_fallback(f2);
  int L = std::max(f1.l_max(), f2.l_max()) + 1;
  auto passthrough = [&](const std::string& src, Interval iv, int k) {
    NodeSpec o;
    o.id = uniquify(M.used, "st" + std::to_string(k));
    o.kind = NodeKind::identity;
    o.prim = "identity";
    o.layer = L;
    o.inputs = {{src, 0}};
    o.R_ij = safe_radius({iv});
    M.nodes.push_back(std::move(o));
  };
  int k = 0;
  for (int j = 0; j < f1.q(); ++j, ++k)
    passthrough(M.out1[j], iv1[f1.node_index(f1.output_ids()[j])], k);
  for (int j = 0; j < f2.q(); ++j, ++k)
    passthrough(M.out2[j], iv2[f2.node_index(f2.output_ids()[j])], k);
  return CompositionalFunction(f1.d(), f1.q() + f2.q(), f1.R(), std::move(M.nodes));
}

Truncation truncate(const CompositionalFunction& f, int layer_i) {
  if (layer_i < 0 || layer_i > f.l_max() - 1)
    throw ShapeError("truncate: layer must be in [0, l_max-1]");

  // a node of layer <= i survives iff some consumer sits above the cut
  std::unordered_map<std::string, double> dummy_radius;
  for (const auto& n : f.nodes()) {
    if (n.layer <= layer_i) continue;
    for (const auto& e : n.inputs) {
      if (f.node(e.src).layer > layer_i) continue;
      auto [it, fresh] = dummy_radius.emplace(e.src, n.R_ij);
      if (!fresh) it->second = std::min(it->second, n.R_ij);
    }
  }

  std::vector<std::string> dummy_ids;
  for (int l = layer_i; l >= 0; --l)
    for (const auto& n : f.nodes())
      if (n.layer == l && dummy_radius.count(n.id)) dummy_ids.push_back(n.id);

  std::vector<NodeSpec> nodes;
  double Rmax = 0;
  for (const auto& id : dummy_ids) {
    NodeSpec in;
    in.id = id;
    in.kind = NodeKind::input;
    in.layer = 0;
    in.R_ij = dummy_radius[id];
    in.m_ij = f.node(id).m_ij;
    Rmax = std::max(Rmax, in.R_ij);
    nodes.push_back(std::move(in));
  }
  for (const auto& n : f.nodes()) {
    if (n.layer <= layer_i) continue;
    NodeSpec c = n;
    c.layer -= layer_i;
    nodes.push_back(std::move(c));
  }
  CompositionalFunction fbar(static_cast<int>(dummy_ids.size()), f.q(), Rmax,
                             std::move(nodes));
  return Truncation{std::move(fbar), std::move(dummy_ids)};
}

CompositionalFunction merge_linear_nodes(const CompositionalFunction& f) {
  std::vector<NodeSpec> nodes = f.nodes();
  // identity nodes are one-input affine maps; normalize so absorption below
  // only deals with the [b, w_1..w_k] parameter layout
  for (auto& n : nodes) {
    if (n.kind == NodeKind::identity) {
      n.kind = NodeKind::linear;
      n.prim = "affine";
      n.params = {0.0, 1.0};
    }
  }
  int l_max = f.l_max();

  // primitives whose parameter vector is the affine layout [b, w_1..w_k]
  auto affine_layout = [](const NodeSpec& n) {
    return n.prim == "affine" || n.prim.rfind("neuron_", 0) == 0;
  };

  while (true) {
    // lowest-layer hidden linear node
    int pick = -1;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      const auto& n = nodes[i];
      if (n.kind != NodeKind::linear || n.layer == 0 || n.layer == l_max) continue;
      if (pick < 0 || n.layer < nodes[pick].layer) pick = i;
    }
    if (pick < 0) break;
    NodeSpec lin = nodes[pick];
    if (!affine_layout(lin))
      throw MergeBlockedError("linear node " + lin.id + " uses primitive " + lin.prim);

    auto coeff = [&](size_t slot) {
      return slot + 1 < lin.params.size() ? lin.params[slot + 1] : 0.0;
    };
    double c0 = lin.params.empty() ? 0.0 : lin.params[0];

    for (auto& c : nodes) {
      bool uses = false;
      for (const auto& e : c.inputs) uses |= e.src == lin.id;
      if (!uses) continue;
      if (c.kind != NodeKind::neuron && c.kind != NodeKind::linear)
        throw MergeBlockedError("linear node " + lin.id + " feeds general node " + c.id +
                                "; the graph is not a neural network");
      if (!affine_layout(c))
        throw MergeBlockedError("consumer " + c.id + " uses primitive " + c.prim);

      double b = c.params.empty() ? 0.0 : c.params[0];
      std::vector<Edge> edges;
      std::vector<double> w;
      for (size_t s = 0; s < c.inputs.size(); ++s) {
        double ws = s + 1 < c.params.size() ? c.params[s + 1] : 0.0;
        if (c.inputs[s].src != lin.id) {
          edges.push_back({c.inputs[s].src, static_cast<int>(edges.size())});
          w.push_back(ws);
          continue;
        }
        b += ws * c0;
        for (size_t t = 0; t < lin.inputs.size(); ++t) {
          edges.push_back({lin.inputs[t].src, static_cast<int>(edges.size())});
          w.push_back(ws * coeff(t));
        }
      }
      c.inputs = std::move(edges);
      c.params.clear();
      c.params.push_back(b);
      for (double ws : w) c.params.push_back(ws);
    }
    nodes.erase(nodes.begin() + pick);
  }

  // compact layer numbering (removals can empty a layer)
  std::vector<int> layers;
  for (const auto& n : nodes) layers.push_back(n.layer);
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  std::unordered_map<int, int> remap;
  for (int i = 0; i < static_cast<int>(layers.size()); ++i) remap[layers[i]] = i;
  for (auto& n : nodes) n.layer = remap[n.layer];

  return CompositionalFunction(f.d(), f.q(), f.R(), std::move(nodes));
}

}  // namespace cf
