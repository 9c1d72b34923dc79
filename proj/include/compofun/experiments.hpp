#pragma once

#include <string>
#include <vector>

#include "compofun/control.hpp"
#include "compofun/dag.hpp"

namespace cf {

struct Assertion {
  std::string name;
  double bound = 0, measured = 0;
  bool pass = false;
};

struct ExperimentReport {
  int exit_code = 0;  // 0 all assertions pass, 1 soundness failure, 2 budget exceeded
  std::string csv;
  std::vector<Assertion> assertions;
  std::string summary_json(uint64_t seed, const std::string& config_text) const;
};

/// Random layered DAG over registry primitives: up to max_layers layers and
/// max_nodes nodes, domains padded from propagated ranges so A1 holds, no
/// dangling nodes, at least one general node.
CompositionalFunction random_dag(Rng& rng, int max_layers = 4, int max_nodes = 12);

struct AuditConfig {
  int n_dags = 50;
  int points = 100;          // oracle points per operation
  int prop3_points = 10000;  // perturbation grid per DAG
  uint64_t seed = 1;
};
/// Pointwise operation oracles, perturbation-propagation soundness, iterated
/// and pairwise bound soundness, identity-insertion / merge preservation.
ExperimentReport run_audit(const AuditConfig& cfg);

struct ApproxConfig {
  int d = 4;
  double F = 8, R = 1;
  std::vector<int> widths = {8, 16, 32, 64};
  int sup_samples = 4096;
  uint64_t seed = 1;
};
/// Width sweep of assembled surrogates of the cyclic test system; checks the
/// propagated bound dominates the measured error and the error shrinks.
ExperimentReport run_approx(const ApproxConfig& cfg);

struct FlowConfig {
  int d = 4;
  double F = 8, R = 1;
  double T = 0.02;
  int K = 5;
  std::vector<int> widths = {8, 16, 32, 64};
  int seeds = 3;  // best-of seeds per width
  double x0_radius = 0.2;
  int sup_samples = 512;
  uint64_t seed = 1;
};
ExperimentReport run_flow(const FlowConfig& cfg);

struct OptctlConfig {
  std::vector<double> eps = {0.1, 0.05};
  int oracle_axis = 200;
  int probe_states = 5;
  uint64_t seed = 1;
};
/// Scalar plant dx = -0.5 x + u with the running control cost folded into an
/// accumulator state, terminal cost 0.4 (x - 0.5)^2 + 0.5 w; T = 2, two
/// intervals, gamma = 0.3.
Thm8Problem lq_benchmark_problem();

/// The bundled LQ problem against a dense grid oracle.
ExperimentReport run_optctl(const OptctlConfig& cfg);

/// Dispatch on {"experiment": "audit" | "approx" | "flow" | "optctl", ...}.
ExperimentReport run_experiment(const std::string& config_text);

}  // namespace cf
