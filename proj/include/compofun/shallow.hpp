#pragma once

#include <functional>

#include "compofun/algebra.hpp"
#include "compofun/dag.hpp"

namespace cf {

struct FitCfg {
  uint64_t seed = 1;          // recorded in reports; fixes the frozen inner weights
  int train_axis = 65;        // tensor grid per axis for d <= 2
  int train_scatter = 16384;  // quasi-random training points otherwise
  int measure_factor = 4;     // measurement grid densification
  double ridge = 1e-10;       // initial ridge parameter, escalates x10 as needed
};

/// One hidden layer sum a_j sigma(w_j^T xt + b_j) where xt is the per-axis
/// normalized input xt_k = (x_k - center_k) / radius_k.
struct ShallowNet {
  int n = 0, d = 0;
  std::vector<std::vector<double>> w;  // n x d
  std::vector<double> b;               // n
  std::vector<double> a;               // n
  std::string activation = "tanh";
  std::vector<double> center, radius;  // per-axis domain box

  double evaluate(const std::vector<double>& x) const;
};

/// Fits the output coefficients by ridge least squares with frozen inner
/// weights; returns the measured sup error over an independent denser grid.
ShallowNet fit_shallow_target(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> center, std::vector<double> radius,
                              int n_width, const FitCfg& cfg = {},
                              double* sup_error = nullptr);

/// Fits a registry node's function over its own domain box.
std::pair<ShallowNet, double> fit_shallow(const NodeSpec& node, int n_width,
                                          const FitCfg& cfg = {});

/// One hidden layer of neuron nodes plus one linear output node; the per-axis
/// normalization is absorbed into the neuron weights.
CompositionalFunction to_dag(const ShallowNet& net);

/// Substitutes a fitted net for every general node, in descending layer order.
CompositionalFunction assemble_deep(const CompositionalFunction& f,
                                    const std::map<std::string, ShallowNet>& nets);

/// Hidden nodes all neurons, output nodes linear, inputs at layer 0.
bool is_neural_network(const CompositionalFunction& f);

int neuron_count(const CompositionalFunction& f);

struct PairNetReport {
  double e_psi = 0;               // measured fit error of the combining stage
  std::vector<double> A, B, Rj;   // operand sup bounds and range radii
};

/// psi^NN o (f1NN, f2NN) for psi = inner product; per-component product nodes
/// fitted at the given width.
CompositionalFunction product_net(const CompositionalFunction& f1nn,
                                  const CompositionalFunction& f2nn, int n_width,
                                  const FitCfg& cfg = {}, PairNetReport* report = nullptr);

/// psi^NN o (f1NN, f2NN) for psi = u/v (scalar operands); the denominator range
/// must be sampled sign-definite.
CompositionalFunction quotient_net(const CompositionalFunction& f1nn,
                                   const CompositionalFunction& f2nn, int n_width,
                                   const FitCfg& cfg = {}, PairNetReport* report = nullptr);

}  // namespace cf
