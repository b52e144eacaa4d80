// Experiment runner: `run` and `validate` take a config file, `graph`
// generates or checks network edge lists.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dsvd/experiment/runner.hpp"
#include "dsvd/graph.hpp"

namespace {

using namespace dsvd;
using namespace dsvd::experiment;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> engine;
  std::optional<int> consensus_iters;
  std::optional<int> threads;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the config seed");
    cmd->add_option("--trials", trials, "Override the trial count");
    cmd->add_option("--out", out, "Override the output CSV path");
    cmd->add_option("--engine", engine, "Consensus engine")->check(CLI::IsMember({"exact", "ac", "ps"}));
    cmd->add_option("--consensus-iters", consensus_iters, "Consensus iterations per instance");
    cmd->add_option("--threads", threads, "Worker threads for trials (0: all cores)");
  }

  void apply(RawConfig& raw) const {
    if (seed) raw["seed"] = std::to_string(*seed);
    if (trials) raw["trials"] = std::to_string(*trials);
    if (out) raw["output"] = *out;
    if (engine) raw["consensus.engine"] = *engine;
    if (consensus_iters) raw["consensus.iterations"] = std::to_string(*consensus_iters);
    if (threads) raw["threads"] = std::to_string(*threads);
  }
};

std::optional<ExperimentConfig> load_or_report(const std::string& path, const Overrides& ov) {
  RawConfig raw = parse_config_file(path);
  ov.apply(raw);
  LoadResult loaded = load_config(raw);
  if (loaded.ok()) return loaded.config;
  for (const std::string& v : loaded.violations) std::cerr << path << ": " << v << '\n';
  return std::nullopt;
}

int cmd_validate(const std::string& path, const Overrides& ov) {
  RawConfig raw = parse_config_file(path);
  ov.apply(raw);
  const auto violations = validate(raw);
  for (const std::string& v : violations) std::cout << v << '\n';
  if (violations.empty()) std::cout << "ok\n";
  return violations.empty() ? 0 : 1;
}

int cmd_run(const std::string& path, const Overrides& ov) {
  const auto cfg = load_or_report(path, ov);
  if (!cfg) return 1;
  const RunOutput result = run_experiment(*cfg);
  std::ostream* summary = &std::cout;
  if (cfg->output.empty()) {
    write_csv(std::cout, result.table);
    summary = &std::cerr;
  } else {
    std::ofstream f(cfg->output, std::ios::binary);
    if (!f) throw Error("cannot write '" + cfg->output + "'");
    write_csv(f, result.table);
    *summary << "wrote " << result.table.rows.size() << " rows to " << cfg->output << '\n';
  }
  for (const auto& [name, curve] : result.roc) {
    if (cfg->radar.roc_prefix.empty()) break;
    const std::string file = cfg->radar.roc_prefix + name + ".csv";
    std::ofstream f(file, std::ios::binary);
    if (!f) throw Error("cannot write '" + file + "'");
    write_roc_csv(f, curve);
    *summary << "wrote ROC for " << name << " to " << file << '\n';
  }
  for (const std::string& line : result.summary) *summary << line << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized SVD simulations"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_ov, validate_ov;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_ov.attach(run);

  auto* val = app.add_subcommand("validate", "List every violated precondition of a config file");
  val->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  validate_ov.attach(val);

  auto* graph = app.add_subcommand("graph", "Generate or check a network edge list");
  graph->require_subcommand(1);
  std::size_t nodes = 10, neighbors = 4;
  double rewire = 0.1;
  std::uint64_t graph_seed = 1;
  std::string graph_out;
  auto* gen = graph->add_subcommand("gen", "Small-world network as an edge list");
  gen->add_option("--nodes", nodes, "Node count")->check(CLI::PositiveNumber);
  gen->add_option("--neighbors", neighbors, "Initial ring neighbours (even)");
  gen->add_option("--rewire", rewire, "Rewiring probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", graph_seed, "Generator seed");
  gen->add_option("--out", graph_out, "Output path (stdout when omitted)");
  std::string check_path;
  auto* check = graph->add_subcommand("check", "Report size and connectivity of an edge list");
  check->add_option("edges", check_path, "Edge list file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, run_ov);
    if (*val) return cmd_validate(config_path, validate_ov);
    if (*gen) {
      const Graph g = generate_small_world(nodes, neighbors, rewire, graph_seed);
      if (graph_out.empty()) {
        write_edge_list(std::cout, g);
      } else {
        std::ofstream f(graph_out, std::ios::binary);
        if (!f) throw Error("cannot write '" + graph_out + "'");
        write_edge_list(f, g);
      }
      return 0;
    }
    if (*check) {
      std::ifstream f(check_path);
      const Graph g = read_edge_list(f);
      const bool connected = g.is_connected();
      std::cout << "nodes " << g.n_nodes() << ", edges " << g.n_edges() << ", "
                << (connected ? "connected" : "not connected") << '\n';
      return connected ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
