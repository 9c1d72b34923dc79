#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "compofun/common.hpp"
#include "compofun/primitives.hpp"

namespace cf {

enum class NodeKind { input, linear, general, identity, neuron };

std::string to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& s);

struct Edge {
  std::string src;
  int slot = 0;
};

/// One scalar-valued node of a layered DAG.
struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::general;
  std::string prim;             // registry name; empty for input nodes
  std::vector<double> params;
  int layer = 0;
  std::vector<Edge> inputs;     // ordered by slot
  double R_ij = 1.0;            // domain half-width, hypercube [-R_ij, R_ij]^{d_ij}
  int m_ij = 2;                 // smoothness order used by feature extraction
};

struct ValidationIssue {
  std::string category;  // "structure" | "layering" | "slots" | "compatibility"
  std::string message;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationIssue> issues;
  void fail(std::string category, std::string message) {
    pass = false;
    issues.push_back({std::move(category), std::move(message)});
  }
};

/// Layered DAG of scalar nodes together with the node -> layer map.  Immutable
/// after construction; evaluation is safe from multiple threads.
class CompositionalFunction {
public:
  CompositionalFunction(int d, int q, double R, std::vector<NodeSpec> nodes);

  int d() const { return d_; }
  int q() const { return q_; }
  double R() const { return R_; }
  int l_max() const { return l_max_; }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const NodeSpec& node(const std::string& id) const;
  bool has_node(const std::string& id) const { return index_.count(id) > 0; }
  int node_index(const std::string& id) const;

  /// Declared-order ids of the layer-0 input nodes; x[k] binds to input_ids()[k].
  const std::vector<std::string>& input_ids() const { return input_ids_; }
  /// Declared-order ids of the nodes in the maximal layer.
  const std::vector<std::string>& output_ids() const { return output_ids_; }
  /// Node indices sorted by (layer, declared position).
  const std::vector<int>& topo_order() const { return topo_; }

  /// Per-input domain half-widths (input nodes of a truncation may differ).
  std::vector<double> input_radii() const;

  std::vector<double> evaluate(const std::vector<double>& x) const;
  std::vector<double> evaluate_unchecked(const std::vector<double>& x) const;

  /// Values of every node at x, indexed like nodes(); no domain checks.
  std::vector<double> node_values(const std::vector<double>& x) const;

  /// Evaluation with each keyed node's value shifted by the given offset after
  /// it is computed (models per-node approximation errors); no domain checks.
  std::vector<double> evaluate_perturbed(const std::vector<double>& x,
                                         const std::map<std::string, double>& offsets) const;

  std::vector<std::string> consumers(const std::string& id) const;

private:
  int d_, q_;
  double R_;
  int l_max_ = 0;
  std::vector<NodeSpec> nodes_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> input_ids_;
  std::vector<std::string> output_ids_;
  std::vector<int> topo_;
  std::vector<std::vector<int>> in_idx_;  // per node, source node index per slot
  std::vector<int> input_pos_;            // node index -> position in x, -1 otherwise

  std::vector<double> eval_impl(const std::vector<double>& x, bool checked) const;
};

ValidationReport validate(const CompositionalFunction& f, int samples_per_edge = 4096,
                          uint64_t seed = 0);

/// Splits every edge that skips a layer with a chain of identity nodes, so the
/// result has layer gaps of exactly 1 on all edges; pointwise equal to f.
CompositionalFunction insert_identity_nodes(const CompositionalFunction& f);

/// Interval range of every node over the function's domain box, indexed like
/// nodes().  Input intervals are the per-input [-R_ij, R_ij].
std::vector<Interval> interval_ranges(const CompositionalFunction& f);

/// Uniform sample from the function's domain box.
std::vector<double> sample_domain(const CompositionalFunction& f, Rng& rng);

}  // namespace cf
