#include "compofun/dag.hpp"

#include <sstream>

namespace cf {

std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::input: return "input";
    case NodeKind::linear: return "linear";
    case NodeKind::general: return "general";
    case NodeKind::identity: return "identity";
    case NodeKind::neuron: return "neuron";
  }
  return "?";
}

NodeKind node_kind_from_string(const std::string& s) {
  if (s == "input") return NodeKind::input;
  if (s == "linear") return NodeKind::linear;
  if (s == "general") return NodeKind::general;
  if (s == "identity") return NodeKind::identity;
  if (s == "neuron") return NodeKind::neuron;
  throw SchemaError("unknown node kind: " + s);
}

CompositionalFunction::CompositionalFunction(int d, int q, double R,
                                             std::vector<NodeSpec> nodes)
    : d_(d), q_(q), R_(R), nodes_(std::move(nodes)) {
  if (d_ <= 0 || q_ <= 0 || !(R_ > 0))
    throw ShapeError("compositional function needs d>0, q>0, R>0");
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (!index_.emplace(nodes_[i].id, i).second)
      throw SchemaError("duplicate node id: " + nodes_[i].id);
  }
  in_idx_.resize(nodes_.size());
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    auto& n = nodes_[i];
    std::stable_sort(n.inputs.begin(), n.inputs.end(),
                     [](const Edge& a, const Edge& b) { return a.slot < b.slot; });
    for (int s = 0; s < static_cast<int>(n.inputs.size()); ++s) {
      if (n.inputs[s].slot != s)
        throw SchemaError("node " + n.id + ": slots are not 0.." +
                          std::to_string(n.inputs.size() - 1));
      auto it = index_.find(n.inputs[s].src);
      if (it == index_.end())
        throw SchemaError("node " + n.id + ": unknown source " + n.inputs[s].src);
      in_idx_[i].push_back(it->second);
    }
    l_max_ = std::max(l_max_, n.layer);
  }
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::input) input_ids_.push_back(n.id);
    if (n.layer == l_max_) output_ids_.push_back(n.id);
  }
  if (static_cast<int>(input_ids_.size()) != d_)
    throw ShapeError("expected " + std::to_string(d_) + " input nodes, found " +
                     std::to_string(input_ids_.size()));
  if (static_cast<int>(output_ids_.size()) != q_)
    throw ShapeError("expected " + std::to_string(q_) + " nodes in the output layer, found " +
                     std::to_string(output_ids_.size()));
  topo_.resize(nodes_.size());
  for (int i = 0; i < static_cast<int>(topo_.size()); ++i) topo_[i] = i;
  std::stable_sort(topo_.begin(), topo_.end(),
                   [&](int a, int b) { return nodes_[a].layer < nodes_[b].layer; });
  input_pos_.assign(nodes_.size(), -1);
  for (int k = 0; k < d_; ++k) input_pos_[index_.at(input_ids_[k])] = k;
}

const NodeSpec& CompositionalFunction::node(const std::string& id) const {
  return nodes_[node_index(id)];
}

int CompositionalFunction::node_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw SchemaError("unknown node id: " + id);
  return it->second;
}

std::vector<double> CompositionalFunction::input_radii() const {
  std::vector<double> r;
  for (const auto& id : input_ids_) r.push_back(node(id).R_ij);
  return r;
}

namespace {
// tolerance for membership of v in [-R, R]
bool in_box(double v, double R) { return std::abs(v) <= R * (1 + 1e-9) + 1e-12; }
}  // namespace

std::vector<double> CompositionalFunction::eval_impl(const std::vector<double>& x,
                                                     bool checked) const {
  if (static_cast<int>(x.size()) != d_)
    throw ShapeError("evaluate: expected " + std::to_string(d_) + " inputs, got " +
                     std::to_string(x.size()));
  std::vector<double> val(nodes_.size(), 0.0);
  std::vector<double> z;
  for (int i : topo_) {
    const NodeSpec& n = nodes_[i];
    if (n.kind == NodeKind::input) {
      double v = x[input_pos_[i]];
      if (checked && !in_box(v, n.R_ij))
        throw DomainError("input " + n.id + ": value " + std::to_string(v) +
                          " outside [-" + std::to_string(n.R_ij) + ", " +
                          std::to_string(n.R_ij) + "]");
      val[i] = v;
      continue;
    }
    const Primitive& pr = primitive(n.prim);
    if (pr.arity >= 0 && pr.arity != static_cast<int>(n.inputs.size()))
      throw CompatibilityError("node " + n.id + ": primitive " + n.prim + " wants " +
                               std::to_string(pr.arity) + " inputs, has " +
                               std::to_string(n.inputs.size()));
    z.clear();
    for (int s : in_idx_[i]) {
      double v = val[s];
      if (checked && !in_box(v, n.R_ij))
        throw CompatibilityError("node " + n.id + ": input value " + std::to_string(v) +
                                 " outside its domain radius " + std::to_string(n.R_ij));
      z.push_back(v);
    }
    val[i] = pr.eval(n.params, z);
  }
  return val;
}

std::vector<double> CompositionalFunction::node_values(const std::vector<double>& x) const {
  return eval_impl(x, false);
}

std::vector<double> CompositionalFunction::evaluate(const std::vector<double>& x) const {
  auto val = eval_impl(x, true);
  std::vector<double> out;
  for (const auto& id : output_ids_) out.push_back(val[node_index(id)]);
  return out;
}

std::vector<double> CompositionalFunction::evaluate_unchecked(
    const std::vector<double>& x) const {
  auto val = eval_impl(x, false);
  std::vector<double> out;
  for (const auto& id : output_ids_) out.push_back(val[node_index(id)]);
  return out;
}

std::vector<double> CompositionalFunction::evaluate_perturbed(
    const std::vector<double>& x, const std::map<std::string, double>& offsets) const {
  if (static_cast<int>(x.size()) != d_)
    throw ShapeError("evaluate_perturbed: wrong input length");
  std::vector<double> shift(nodes_.size(), 0.0);
  for (const auto& [id, off] : offsets) {
    int i = node_index(id);
    if (nodes_[i].kind == NodeKind::input)
      throw ShapeError("evaluate_perturbed: " + id + " is an input node");
    shift[i] = off;
  }
  std::vector<double> val(nodes_.size(), 0.0);
  std::vector<double> z;
  for (int i : topo_) {
    const NodeSpec& n = nodes_[i];
    if (n.kind == NodeKind::input) {
      val[i] = x[input_pos_[i]];
      continue;
    }
    z.clear();
    for (int s : in_idx_[i]) z.push_back(val[s]);
    val[i] = primitive(n.prim).eval(n.params, z) + shift[i];
  }
  std::vector<double> out;
  for (const auto& id : output_ids_) out.push_back(val[node_index(id)]);
  return out;
}

std::vector<std::string> CompositionalFunction::consumers(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& n : nodes_)
    for (const auto& e : n.inputs)
      if (e.src == id) {
        out.push_back(n.id);
        break;
      }
  return out;
}

ValidationReport validate(const CompositionalFunction& f, int samples_per_edge,
                          uint64_t seed) {
  ValidationReport rep;
  const auto& nodes = f.nodes();

  for (const auto& n : nodes) {
    for (const auto& e : n.inputs) {
      const NodeSpec& src = f.node(e.src);
      if (src.layer >= n.layer)
        rep.fail("layering", "edge " + src.id + " -> " + n.id + " has layers " +
                                 std::to_string(src.layer) + " -> " +
                                 std::to_string(n.layer));
    }
    if (n.kind == NodeKind::input) {
      if (n.layer != 0) rep.fail("structure", "input node " + n.id + " not in layer 0");
      if (!n.inputs.empty())
        rep.fail("structure", "input node " + n.id + " has inward edges");
    } else {
      if (!has_primitive(n.prim)) {
        rep.fail("structure", "node " + n.id + ": unknown primitive " + n.prim);
        continue;
      }
      const Primitive& pr = primitive(n.prim);
      if (pr.arity >= 0 && pr.arity != static_cast<int>(n.inputs.size()))
        rep.fail("slots", "node " + n.id + ": primitive " + n.prim + " wants " +
                              std::to_string(pr.arity) + " inputs, has " +
                              std::to_string(n.inputs.size()));
      if ((n.kind == NodeKind::linear || n.kind == NodeKind::identity) && !pr.linear)
        rep.fail("structure", "node " + n.id + ": kind " + to_string(n.kind) +
                                  " with nonlinear primitive " + n.prim);
      if (n.kind == NodeKind::identity && n.prim != "identity")
        rep.fail("structure", "identity node " + n.id + " uses primitive " + n.prim);
      if (n.kind == NodeKind::neuron && n.prim.rfind("neuron_", 0) != 0)
        rep.fail("structure", "neuron node " + n.id + " uses primitive " + n.prim);
      if (n.kind == NodeKind::general && (n.inputs.empty() || n.m_ij < 1))
        rep.fail("structure", "general node " + n.id + " needs d_ij >= 1 and m_ij >= 1");
      if (!(n.R_ij > 0)) rep.fail("structure", "node " + n.id + ": R_ij must be positive");
    }
    if (n.layer != f.l_max() && f.consumers(n.id).empty())
      rep.fail("structure", "node " + n.id + " has no consumers but is not in the output layer");
  }
  if (!rep.pass) return rep;

  // sampled A1 check: range of every edge source strictly inside the interior
  // of the consumer's domain box
  Rng rng(seed ^ 0x51ed2705u);
  auto radii = f.input_radii();
  int d = f.d();
  std::vector<std::vector<double>> points;
  for (int s = 0; s < samples_per_edge; ++s) {
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k) x[k] = rng.uniform(-radii[k], radii[k]);
    points.push_back(std::move(x));
  }
  if (d <= 12) {
    for (uint64_t mask = 0; mask < (uint64_t{1} << d); ++mask) {
      std::vector<double> x(d);
      for (int k = 0; k < d; ++k) x[k] = (mask >> k & 1) ? radii[k] : -radii[k];
      points.push_back(std::move(x));
    }
  }

  std::unordered_map<std::string, double> edge_excess;
  for (const auto& x : points) {
    auto val = f.node_values(x);
    for (const auto& n : nodes) {
      if (n.kind == NodeKind::input) continue;
      for (const auto& e : n.inputs) {
        double v = val[f.node_index(e.src)];
        if (!in_box(v, n.R_ij)) {
          std::string key = e.src + " -> " + n.id;
          double ex = std::abs(v) - n.R_ij;
          auto [it, fresh] = edge_excess.emplace(key, ex);
          if (!fresh) it->second = std::max(it->second, ex);
        }
      }
    }
  }
  for (const auto& [edge, ex] : edge_excess)
    rep.fail("compatibility", "edge " + edge + ": sampled range exceeds the consumer's " +
                                  "domain interior by " + std::to_string(ex));
  return rep;
}

CompositionalFunction insert_identity_nodes(const CompositionalFunction& f) {
  std::vector<NodeSpec> nodes = f.nodes();
  std::vector<NodeSpec> added;
  int serial = 0;
  for (auto& n : nodes) {
    for (auto& e : n.inputs) {
      int gap = n.layer - f.node(e.src).layer;
      if (gap <= 1) continue;
      std::string prev = e.src;
      for (int l = f.node(e.src).layer + 1; l < n.layer; ++l) {
        NodeSpec idn;
        idn.id = "idn" + std::to_string(serial++) + "_" + e.src + "_" + n.id;
        idn.kind = NodeKind::identity;
        idn.prim = "identity";
        idn.layer = l;
        idn.inputs = {{prev, 0}};
        idn.R_ij = n.R_ij;
        idn.m_ij = n.m_ij;
        prev = idn.id;
        added.push_back(std::move(idn));
      }
      e.src = prev;
    }
  }
  for (auto& a : added) nodes.push_back(std::move(a));
  return CompositionalFunction(f.d(), f.q(), f.R(), std::move(nodes));
}

std::vector<Interval> interval_ranges(const CompositionalFunction& f) {
  std::vector<Interval> rng(f.nodes().size());
  std::vector<Interval> z;
  for (int i : f.topo_order()) {
    const NodeSpec& n = f.nodes()[i];
    if (n.kind == NodeKind::input) {
      rng[i] = Interval{-n.R_ij, n.R_ij};
      continue;
    }
    z.clear();
    for (const auto& e : n.inputs) z.push_back(rng[f.node_index(e.src)]);
    rng[i] = primitive(n.prim).range(n.params, z);
  }
  return rng;
}

std::vector<double> sample_domain(const CompositionalFunction& f, Rng& rng) {
  auto radii = f.input_radii();
  std::vector<double> x(f.d());
  for (int k = 0; k < f.d(); ++k) x[k] = rng.uniform(-radii[k], radii[k]);
  return x;
}

}  // namespace cf
