#pragma once

#include "compofun/dag.hpp"

namespace testutil {

using namespace cf;

inline NodeSpec mk(std::string id, NodeKind kind, std::string prim,
                   std::vector<double> params, int layer, std::vector<std::string> srcs,
                   double R = 1.0, int m = 2) {
  NodeSpec n;
  n.id = std::move(id);
  n.kind = kind;
  n.prim = std::move(prim);
  n.params = std::move(params);
  n.layer = layer;
  for (int s = 0; s < static_cast<int>(srcs.size()); ++s) n.inputs.push_back({srcs[s], s});
  n.R_ij = R;
  n.m_ij = m;
  return n;
}

inline NodeSpec in(std::string id, double R = 1.0) {
  return mk(std::move(id), NodeKind::input, "", {}, 0, {}, R);
}

// f(x) = (sin(x1 x2), cos(x2 x3), x1 x3) on [-1,1]^3
inline CompositionalFunction trig_triple() {
  std::vector<NodeSpec> nodes = {
      in("x1"), in("x2"), in("x3"),
      mk("p12", NodeKind::general, "product", {}, 1, {"x1", "x2"}, 1.1),
      mk("p23", NodeKind::general, "product", {}, 1, {"x2", "x3"}, 1.1),
      mk("p13", NodeKind::general, "product", {}, 1, {"x1", "x3"}, 1.1),
      mk("s", NodeKind::general, "sin", {}, 2, {"p12"}, 1.5),
      mk("c", NodeKind::general, "cos", {}, 2, {"p23"}, 1.5),
      mk("o3", NodeKind::identity, "identity", {}, 2, {"p13"}, 1.5),
  };
  return CompositionalFunction(3, 3, 1.0, std::move(nodes));
}

// q-dimensional identity map on [-R,R]^q
inline CompositionalFunction identity_map(int q, double R) {
  std::vector<NodeSpec> nodes;
  for (int k = 0; k < q; ++k) nodes.push_back(in("x" + std::to_string(k), R));
  for (int k = 0; k < q; ++k)
    nodes.push_back(mk("o" + std::to_string(k), NodeKind::identity, "identity", {}, 1,
                       {"x" + std::to_string(k)}, R * 1.1 + 1e-9));
  return CompositionalFunction(q, q, R, std::move(nodes));
}

}  // namespace testutil
