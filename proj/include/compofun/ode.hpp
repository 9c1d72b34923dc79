#pragma once

#include "compofun/algebra.hpp"
#include "compofun/features.hpp"

namespace cf {

/// The explicit Euler operator x + h f(x) as an induced DAG: f's graph plus
/// one linear output node per component at a new top layer.
CompositionalFunction euler_step(const CompositionalFunction& f, double h);

/// K-fold self-composition of euler_step(f, T/K) as an unrolled DAG.  Refuses
/// graphs above a million nodes; use flow_map for long horizons.
CompositionalFunction euler_flow(const CompositionalFunction& f, double T, int K);

/// The same flow map for a network surrogate of f; neuron count is K times
/// the surrogate's.
CompositionalFunction flow_net(const CompositionalFunction& fnn, double T, int K);

/// Iterator form of the flow: holds one Euler step and applies it K times,
/// so long horizons never materialize the unrolled graph.  Domain escapes
/// during checked evaluation report the iterate index.
class FlowMap {
 public:
  FlowMap(CompositionalFunction step, double T, int K);

  const CompositionalFunction& step() const { return step_; }
  double horizon() const { return T_; }
  int iterations() const { return K_; }

  std::vector<double> evaluate(const std::vector<double>& x) const;
  std::vector<double> evaluate_unchecked(const std::vector<double>& x) const;

 private:
  CompositionalFunction step_;
  double T_;
  int K_;
};

FlowMap flow_map(const CompositionalFunction& f, double T, int K);

/// Sampled bounds for the flow error constants: A = max |f|_p over the domain,
/// B = max induced p-norm of the Jacobian, alpha = max logarithmic norm (so
/// 1 + h alpha bounds the one-step Lipschitz constant; alpha <= B always).
struct OdeConstants {
  double A = 0, B = 0, alpha = 0;
};
OdeConstants estimate_ode_constants(const CompositionalFunction& f, double p = kInf,
                                    int samples = 2048, uint64_t seed = 0);

/// Flow-surrogate error constant and the induced width/complexity bounds.
struct Thm4Result {
  double C = 0;           // C1 max{e^{aT},1} T L_max Lambda |V_G| + A e^{BT} T
  double bound = 0;       // C n^{-1/r_max}
  long long complexity = 0;  // (n^{1/r_max}+1) n |V_G| total neurons
};
Thm4Result thm4_bound(const Features& ft, double A, double B, double alpha, double T,
                      int n_width, double C1 = 1.0);

/// Step count matching the bound shape: ceil(n_width^{1/r_max}).
int default_flow_steps(const Features& ft, int n_width);

/// Cyclic d-dimensional system dx_i = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F
/// as a three-layer DAG on [-R,R]^d; the products live on [-2R,2R]^2.
CompositionalFunction make_lorenz96(int d, double F, double R);

}  // namespace cf
