#pragma once

#include "compofun/dag.hpp"

namespace cf {

/// a*f1 + b*f2 with shared inputs; new linear output layer at
/// max{l_max^f1, l_max^f2} + 1.
CompositionalFunction linear_combine(const CompositionalFunction& f1,
                                     const CompositionalFunction& f2, double a, double b);

/// f1^T f2; single general "dot" output node.
CompositionalFunction inner_product(const CompositionalFunction& f1,
                                    const CompositionalFunction& f2);

/// f1/f2 for scalar outputs; the denominator is sample-checked for zeros.
CompositionalFunction divide(const CompositionalFunction& f1,
                             const CompositionalFunction& f2);

/// Replaces one node with a scalar-output function of the same input arity.
/// The replacement's output node inherits the replaced node's id.
CompositionalFunction substitute_node(const CompositionalFunction& f,
                                      const std::string& node_id,
                                      const CompositionalFunction& g,
                                      int check_samples = 256);

/// g after f; layers of g-nodes shift up by l_max^f.
CompositionalFunction compose(const CompositionalFunction& g, const CompositionalFunction& f,
                              int check_samples = 256);

/// (f1; f2) over shared inputs: output dimension q1 + q2, f1's outputs first.
CompositionalFunction stack(const CompositionalFunction& f1, const CompositionalFunction& f2);

struct Truncation {
  CompositionalFunction fbar;
  // original ids of the dummy inputs, in fbar input order (cut-layer nodes
  // first, then lower layers, each group in declared order)
  std::vector<std::string> dummy_ids;
};

/// Cuts the DAG along layer i (0 <= i <= l_max-1); surviving upstream nodes
/// become dummy inputs whose domain is the intersection of their consumers'.
Truncation truncate(const CompositionalFunction& f, int layer_i);

/// Absorbs hidden affine nodes into their neuron / linear consumers.  Fails
/// with MergeBlockedError when a hidden affine node feeds a general non-neuron
/// node (such a graph is not a neural network).
CompositionalFunction merge_linear_nodes(const CompositionalFunction& f);

/// Per-node ranges; interval propagation with a sampling fallback where the
/// propagated interval is unbounded (e.g. past a quotient).
std::vector<Interval> ranges_with_fallback(const CompositionalFunction& f);

}  // namespace cf
