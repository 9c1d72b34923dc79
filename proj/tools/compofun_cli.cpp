#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "compofun/experiments.hpp"
#include "compofun/features.hpp"
#include "compofun/io.hpp"
#include "compofun/shallow.hpp"

using namespace cf;

namespace {

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name);
  out << text;
}

int emit(const ExperimentReport& rep, const std::string& out_dir, const std::string& name,
         uint64_t seed, const nlohmann::json& config) {
  write_file(out_dir, name + ".csv", rep.csv);
  auto summary = rep.summary_json(seed, config.dump());
  write_file(out_dir, name + "_summary.json", summary);
  std::cout << summary;
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional function networks: validation, fitting, flows, control"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "seed for every stochastic estimate");
  app.add_option("--threads", threads, "worker threads (reports are single-thread deterministic)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "directory for result files");

  std::string dag_path;
  int samples = 4096;
  auto* vcmd = app.add_subcommand("validate", "check a DAG file against the structural rules");
  vcmd->add_option("dag", dag_path, "DAG JSON file")->required();
  vcmd->add_option("--samples", samples, "A1 samples per edge");

  double p_norm = kInf;
  auto* fcmd = app.add_subcommand("features", "extract the feature quadruple");
  fcmd->add_option("dag", dag_path)->required();
  fcmd->add_option("--p", p_norm, "norm parameter (inf by default)");

  int width = 32;
  auto* fitcmd = app.add_subcommand("fit", "fit shallow networks to every general node");
  fitcmd->add_option("dag", dag_path)->required();
  fitcmd->add_option("--width", width, "hidden-layer width")->check(CLI::PositiveNumber);

  bool do_merge = false;
  auto* acmd = app.add_subcommand("assemble", "substitute fitted networks into the DAG");
  acmd->add_option("dag", dag_path)->required();
  acmd->add_option("--width", width)->check(CLI::PositiveNumber);
  acmd->add_flag("--merge", do_merge, "merge hidden affine nodes afterwards");

  FlowConfig flow_cfg;
  auto* flcmd = app.add_subcommand("flow", "flow-map surrogate error sweep");
  flcmd->add_option("--d", flow_cfg.d)->check(CLI::Range(4, 64));
  flcmd->add_option("--forcing", flow_cfg.F);
  flcmd->add_option("--radius", flow_cfg.R);
  flcmd->add_option("--horizon", flow_cfg.T);
  flcmd->add_option("--steps", flow_cfg.K)->check(CLI::PositiveNumber);
  flcmd->add_option("--widths", flow_cfg.widths);
  flcmd->add_option("--fit-seeds", flow_cfg.seeds)->check(CLI::PositiveNumber);

  OptctlConfig oc_cfg;
  auto* occmd = app.add_subcommand("optctl", "closed-loop control error against a grid oracle");
  occmd->add_option("--eps", oc_cfg.eps, "target accuracies");
  occmd->add_option("--oracle-axis", oc_cfg.oracle_axis)->check(CLI::PositiveNumber);

  AuditConfig au_cfg;
  auto* aucmd = app.add_subcommand("audit", "operation oracles and bound soundness on random DAGs");
  aucmd->add_option("--dags", au_cfg.n_dags)->check(CLI::PositiveNumber);
  aucmd->add_option("--points", au_cfg.points)->check(CLI::PositiveNumber);
  aucmd->add_option("--prop-points", au_cfg.prop3_points)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (vcmd->parsed()) {
      auto f = parse_dag([&] {
        std::ifstream in(dag_path);
        if (!in) throw ConfigError("cannot open " + dag_path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
      }());
      auto rep = validate(f, samples, seed);
      for (const auto& issue : rep.issues)
        std::cout << issue.category << ": " << issue.message << "\n";
      std::cout << (rep.pass ? "valid" : "invalid") << " (" << f.nodes().size()
                << " nodes, " << f.l_max() + 1 << " layers)\n";
      return rep.pass ? 0 : 1;
    }

    if (fcmd->parsed()) {
      auto f = load_dag(dag_path);
      auto ft = extract_features(f, p_norm);
      write_file(out_dir, "features.json", features_to_json(ft));
      write_file(out_dir, "features.csv", features_to_csv(ft));
      std::cout << features_to_json(ft);
      return 0;
    }

    if (fitcmd->parsed() || acmd->parsed()) {
      auto f = load_dag(dag_path);
      std::map<std::string, ShallowNet> nets;
      std::ostringstream csv;
      csv << "id,width,sup_error\n";
      csv.precision(17);
      FitCfg fc;
      fc.seed = seed;
      for (const auto& n : f.nodes()) {
        if (n.kind != NodeKind::general) continue;
        auto [net, err] = fit_shallow(n, width, fc);
        nets[n.id] = std::move(net);
        csv << n.id << ',' << width << ',' << err << '\n';
      }
      write_file(out_dir, "fit.csv", csv.str());
      std::cout << csv.str();
      if (acmd->parsed()) {
        auto fnn = assemble_deep(f, nets);
        if (do_merge) fnn = merge_linear_nodes(fnn);
        auto path = (std::filesystem::path(out_dir) / "assembled.json").string();
        std::filesystem::create_directories(out_dir);
        save_dag(fnn, path);
        std::cout << "assembled " << path << " (" << neuron_count(fnn) << " neurons, network="
                  << (is_neural_network(fnn) ? "yes" : "no") << ")\n";
      }
      return 0;
    }

    nlohmann::json cfg;
    if (flcmd->parsed()) {
      flow_cfg.seed = seed;
      cfg = {{"experiment", "flow"},      {"d", flow_cfg.d},
             {"F", flow_cfg.F},           {"R", flow_cfg.R},
             {"T", flow_cfg.T},           {"K", flow_cfg.K},
             {"widths", flow_cfg.widths}, {"seeds", flow_cfg.seeds},
             {"seed", seed}};
      return emit(run_flow(flow_cfg), out_dir, "flow", seed, cfg);
    }
    if (occmd->parsed()) {
      oc_cfg.seed = seed;
      cfg = {{"experiment", "optctl"},
             {"eps", oc_cfg.eps},
             {"oracle_axis", oc_cfg.oracle_axis},
             {"seed", seed}};
      return emit(run_optctl(oc_cfg), out_dir, "optctl", seed, cfg);
    }
    if (aucmd->parsed()) {
      au_cfg.seed = seed;
      cfg = {{"experiment", "audit"},
             {"n_dags", au_cfg.n_dags},
             {"points", au_cfg.points},
             {"prop3_points", au_cfg.prop3_points},
             {"seed", seed}};
      return emit(run_audit(au_cfg), out_dir, "audit", seed, cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
