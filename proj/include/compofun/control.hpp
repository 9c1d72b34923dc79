#pragma once

#include <functional>

#include "compofun/algebra.hpp"
#include "compofun/features.hpp"

namespace cf {

/// Cost over a state and a control vector.
using CostFn =
    std::function<double(const std::vector<double>&, const std::vector<double>&)>;

/// Fixed-point control problem: minimize V(x, .) over the control ball
/// { ||u - u0||_2 <= 2 gamma }.
struct ControlProblem {
  int d = 0;       // state dimension
  int q = 0;       // control dimension
  double R = 1.0;  // state sampling box radius
  CostFn V;
  std::vector<double> u0;
  double gamma = 1.0;
  double lambda_min = 0, lambda_max = 0;  // Hessian eigenvalue bounds; <= 0 means estimate
};

/// Step size and contraction factor induced by the Hessian eigenvalue bounds:
/// beta = 1 / max{1, 2 lambda_max}, L = 1 - lambda_min / max{1, 2 lambda_max}.
struct ContractionParams {
  double beta = 0, L = 0;
};
ContractionParams contraction_params(double lambda_min, double lambda_max);

/// Sampled finite-difference Hessians of V in u over D x U, extreme eigenvalues
/// shrunk / inflated by 10% safety margins.
struct HessianBounds {
  double lambda_min = 0, lambda_max = 0;
};
HessianBounds estimate_hessian_bounds(const CostFn& V, int d, int q, double R,
                                      const std::vector<double>& u0, double gamma,
                                      int points = 20, uint64_t seed = 0);

/// Forward difference of V in u, entry j = (V(u + h e_j) - V(u)) / h.
std::vector<double> finite_diff_grad(const CostFn& V, const std::vector<double>& x,
                                     const std::vector<double>& u, double h);

/// One gradient-descent step u - beta grad_u V with a near-exact (central
/// difference) gradient; construction runs a sampled contraction test.
class PsiMap {
 public:
  PsiMap(CostFn V, double beta, double grad_h);
  std::vector<double> operator()(const std::vector<double>& x,
                                 const std::vector<double>& u) const;
  double beta() const { return beta_; }

 private:
  CostFn V_;
  double beta_, grad_h_;
};

/// beta <= 0 picks the default from the problem's eigenvalue bounds.  Throws
/// ContractionError when sampled pairs violate the expected factor.
PsiMap psi_map(const ControlProblem& pb, double beta = -1, double grad_h = 1e-7,
               int check_samples = 64, uint64_t seed = 0);

/// K forward-difference descent steps from u0 on the (possibly approximate)
/// cost; iterates leaving the 2 gamma ball raise InvarianceError.
std::vector<double> solve_optimal(const ControlProblem& pb, const CostFn& Vsource,
                                  const std::vector<double>& x, int K, double h);

/// gamma L^K + C1 sqrt(q) K h + 2 sqrt(q) K h^{-1} e1.
double thm7_bound(double gamma, double L, double C1, int q, int K, double h, double e1);

/// Minimizer of the two h-dependent terms at fixed K: sqrt(2 e1 / C1).
double optimal_fd_step(double e1, double C1);

/// Euler rollout of dx = f(x, u_k) under a zero-order hold: U stacks N_t
/// control vectors of length q; each interval takes `substeps` Euler steps.
/// Domain escapes name the interval.
std::vector<double> zoh_rollout(const CompositionalFunction& f, std::vector<double> x,
                                const std::vector<double>& U, double T, int N_t,
                                int substeps = 1);

/// Terminal cost of the rollout, Psi(Phi(x, U)).
double zoh_cost(const CompositionalFunction& Psi, const CompositionalFunction& f,
                const std::vector<double>& x, const std::vector<double>& U, double T,
                int N_t, int substeps = 1);

/// The same cost as one DAG in (x, U): per-substep augmented Euler maps
/// composed across intervals, then Psi on the final state.  Input radii come
/// from f's state and control boxes.
CompositionalFunction zoh_cost_dag(const CompositionalFunction& Psi,
                                   const CompositionalFunction& f, double T, int N_t,
                                   int substeps = 1);

struct Thm8Problem {
  Thm8Problem(CompositionalFunction dynamics, CompositionalFunction terminal)
      : f(std::move(dynamics)), Psi(std::move(terminal)) {}

  CompositionalFunction f;    // (x, u) -> dx over d + q inputs
  CompositionalFunction Psi;  // terminal cost over d inputs
  double T = 1.0;
  int N_t = 1;
  double D_radius = 1.0;           // initial-state sampling box
  std::vector<double> u0;          // per-interval base control, length q
  double gamma = 1.0;
};

struct Thm8Config {
  double Cbar1 = 5.0, Cbar2 = 0.2, Cbar3 = 0.1;  // schedule calibration knobs
  double C1 = 0;                                 // 0: estimated from the Hessian diagonal
  int substeps = 1;
  std::vector<int> widths = {16, 32, 64, 128, 256};
  int hessian_points = 20;
  int e1_samples = 4096;
  uint64_t seed = 0;
};

struct Thm8Report {
  double eps = 0;
  int K = 0;
  double h = 0;
  double e1_target = 0, e1_achieved = 0;
  int n_width = 0;
  long long complexity = 0;  // 2 n1 (q N_t) K with n1 the cost network's neurons
  double lambda_min = 0, lambda_max = 0, beta = 0, L = 0, C1 = 0;
  bool budget_exceeded = false;
};

/// Schedules (K, h, e1) from eps, fits a network cost to the e1 target with
/// escalating widths, and returns the resulting control map x -> U.  An
/// unreachable e1 target sets budget_exceeded instead of throwing.
std::function<std::vector<double>(const std::vector<double>&)> thm8_pipeline(
    const Thm8Problem& pb, double eps, const Thm8Config& cfg = {},
    Thm8Report* report = nullptr);

}  // namespace cf
