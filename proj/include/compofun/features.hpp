#pragma once

#include <map>
#include <optional>

#include "compofun/algebra.hpp"
#include "compofun/dag.hpp"

namespace cf {

struct SampleCfg {
  int coarse = 2048;     // quasi-random samples of the dummy-input box
  int refine = 200;      // local search steps around the running maximum
  uint64_t seed = 0;
  double margin = 0.05;  // safety factor on sampled suprema
};

struct GridCfg {
  int axis_points = 65;  // tensor grid per axis when d <= 2
  int scatter = 8192;    // quasi-random points otherwise
};

struct PerNodeFeature {
  std::string id;
  int d_ij = 0;
  int m_ij = 0;
  double R_ij = 0;
  double L_ij = 0;
  double sobolev = 0;
};

/// The feature quadruple plus per-node detail; maxima are over general nodes.
struct Features {
  bool empty = true;  // no general nodes
  double r_max = 0, Lambda = 0, L_max = 0;
  int n_general = 0;
  double p = kInf;
  std::vector<PerNodeFeature> per_node;
};

/// Sensitivity of the truncation along the node's layer to that node's value,
/// treated as a free dummy input.  Exact (no sampling margin) when the
/// truncation is affine; otherwise sampled supremum of difference quotients
/// times (1 + margin).
double node_lipschitz(const CompositionalFunction& f, const std::string& node_id,
                      double p = kInf, const SampleCfg& cfg = {});

/// Sum over derivative orders j = 0..m of the largest sup |d^k| with |k| = j,
/// over the node's own domain box.
double sobolev_norm(const NodeSpec& node, int m, const GridCfg& cfg = {});

Features extract_features(const CompositionalFunction& f, double p = kInf,
                          const SampleCfg& cfg = {}, const GridCfg& grid = {});

/// Sum of L_j * eps_j over the perturbed nodes (output-layer nodes have L = 1).
double propagate_errors(const CompositionalFunction& f,
                        const std::map<std::string, double>& node_errors, double p = kInf,
                        const SampleCfg& cfg = {});

/// Error of a K-fold iterate: ((L^K-1)/(L-1)) e1 + L^K e2, or with (L_h, e3)
/// supplied, L_h ((L^K-1)/(L-1)) e1 + e3.  Continuous at L = 1.
double iterate_error_bound(double L_f, int K, double e1, double e2,
                           std::optional<double> L_h = std::nullopt,
                           std::optional<double> e3 = std::nullopt);

double thm2_bound(const Features& ft, int n_width, double C1);

/// Per-node refinement: sum of L_ij C_ij max{R^m,1} |f_ij| n^{-m_ij/d_ij}.
double thm2_refined_bound(const Features& ft, int n_width,
                          const std::map<std::string, double>& C_ij);

struct ComplexityBound {
  long long n_width = 0;  // smallest width meeting the tolerance
  long long neurons = 0;  // C (L Lambda)^r |V|^{r+1} eps^{-r}, rounded up
};
ComplexityBound complexity_for_tolerance(const Features& ft, double eps, double C = 1.0);

/// Largest C1 consistent with measured assembled-net errors at the given widths.
double calibrate_c1(const Features& ft, const std::vector<std::pair<int, double>>& runs);

double thm5_product_lambda(const std::vector<double>& A, const std::vector<double>& B,
                           const std::vector<double>& Rj, int m);
double thm5_product_bound(double max_f_norm2, double max_g_norm2, double e1, double e2,
                          double C, double Lambda, int q, int n_width, int m);
double thm5_quotient_lambda(double A, double B, double R1, int m);
/// Requires e2 <= B/2 (the denominator stays bounded below).
double thm5_quotient_bound(double A, double B, double e1, double e2, double C,
                           double Lambda, int n_width, int m);

}  // namespace cf
