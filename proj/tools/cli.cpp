#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topoexplore/control.hpp"
#include "topoexplore/optimality.hpp"
#include "topoexplore/oracles.hpp"

namespace fs = std::filesystem;
using namespace topo;

namespace {

struct RunConfig {
  control::ExplorationConfig exploration;
  double start_x = 0.0;
  double start_y = 0.0;
  double start_theta = 0.0;
};

// the printable key set doubles as the config-file schema
std::vector<std::pair<std::string, double*>> double_keys(RunConfig& c) {
  return {
      {"grid_resolution", &c.exploration.grid_resolution},
      {"inflation_radius", &c.exploration.inflation_radius},
      {"vertex_spacing", &c.exploration.vertex_spacing},
      {"sense_interval", &c.exploration.sense_interval},
      {"mean_shift_bandwidth", &c.exploration.mean_shift_bandwidth},
      {"rrt_step", &c.exploration.rrt_step},
      {"sensor_fov", &c.exploration.sensor.fov},
      {"sensor_max_range", &c.exploration.sensor.max_range},
      {"sensor_range_noise_std", &c.exploration.sensor.range_noise_std},
      {"sensor_bearing_noise_std", &c.exploration.sensor.bearing_noise_std},
      {"odom_noise_x", &c.exploration.sensor.odom_noise_std.x()},
      {"odom_noise_y", &c.exploration.sensor.odom_noise_std.y()},
      {"odom_noise_theta", &c.exploration.sensor.odom_noise_std.z()},
      {"novelty_radius", &c.exploration.novelty.radius},
      {"start_x", &c.start_x},
      {"start_y", &c.start_y},
      {"start_theta", &c.start_theta},
  };
}

std::vector<std::pair<std::string, int*>> int_keys(RunConfig& c) {
  return {
      {"rrt_iterations", &c.exploration.rrt_iterations},
      {"min_info_radius_cells", &c.exploration.min_info_radius_cells},
      {"max_candidate_age", &c.exploration.max_candidate_age},
      {"theta_covis", &c.exploration.theta_covis},
      {"epoch_cap", &c.exploration.epoch_cap},
      {"jobs", &c.exploration.jobs},
      {"lc_n_p_min", &c.exploration.lc_params.n_p_min},
      {"lc_n_p_max", &c.exploration.lc_params.n_p_max},
  };
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  auto dk = double_keys(cfg);
  auto ik = int_keys(cfg);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    bool found = false;
    for (auto& [k, p] : dk)
      if (k == key) {
        *p = std::stod(val);
        found = true;
      }
    for (auto& [k, p] : ik)
      if (k == key) {
        *p = std::stoi(val);
        found = true;
      }
    if (!found)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key " + key);
  }
}

void print_config(RunConfig& cfg) {
  for (auto& [k, p] : double_keys(cfg)) std::printf("%s = %.9g\n", k.c_str(), *p);
  for (auto& [k, p] : int_keys(cfg)) std::printf("%s = %d\n", k.c_str(), *p);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int cmd_explore(const std::string& world_file, std::uint64_t seed, const std::string& out_dir,
                RunConfig cfg, bool dump_candidates) {
  core::World world;
  try {
    world = core::load_world(world_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const auto result = control::run_episode(
      world, core::Pose2(cfg.start_x, cfg.start_y, cfg.start_theta), cfg.exploration, seed,
      dump_candidates);

  const fs::path out(out_dir);
  fs::create_directories(out);
  write_file(out / "episode.csv", result.log.to_csv());
  write_file(out / "grid.pgm", result.final_grid.to_pgm());
  write_file(out / "graph.txt", core::serialize_graph(result.final_graph));
  {
    std::ostringstream summary;
    summary << "epochs " << result.log.epochs.size() << "\n"
            << "incomplete " << (result.log.incomplete ? 1 : 0) << "\n"
            << "certain_loop_closure " << (result.had_certain_loop_closure ? 1 : 0) << "\n";
    if (!result.log.epochs.empty())
      summary << "final_coverage "
              << std::to_string(result.log.epochs.back().coverage) << "\n";
    write_file(out / "summary.txt", summary.str());
  }
  if (dump_candidates) {
    const fs::path dumps = out / "candidates";
    fs::create_directories(dumps);
    for (std::size_t ep = 0; ep < result.per_epoch_candidates.size(); ++ep)
      for (const auto& cand : result.per_epoch_candidates[ep]) {
        char name[64];
        std::snprintf(name, sizeof(name), "epoch_%03zu_frontier_%d.txt", ep, cand.frontier.id);
        write_file(dumps / name, core::serialize_graph(cand.graph));
      }
  }
  std::printf("epochs: %zu  coverage: %.4f  %s\n", result.log.epochs.size(),
              result.log.epochs.empty() ? 0.0 : result.log.epochs.back().coverage,
              result.log.incomplete ? "epoch cap reached" : "explored");
  return result.log.incomplete ? 2 : 0;
}

int cmd_eval(const std::string& graph_file) {
  std::ifstream in(graph_file, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << graph_file << "\n";
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  core::WeightedPoseGraph g;
  try {
    g = core::parse_graph(buf.str());
  } catch (const core::GraphParseError& e) {
    std::cerr << "parse error: line " << e.line << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  // edges serialized without an explicit weight fall back to their D-opt
  for (std::size_t i = 0; i < g.weights.size(); ++i)
    if (g.weights[i] < 0.0) g.weights[i] = optimality::dopt_matrix(g.base.edges()[i].info.m);

  if (!g.base.is_connected()) {
    std::printf("dopt_graph %.9g\n", 0.0);
    std::printf("graph is disconnected: zero spanning trees\n");
    return 0;
  }
  std::printf("dopt_graph %.9g\n", optimality::dopt_graph(g));
  std::printf("log_tree_weight %.9g\n", optimality::log_tree_weight(g));
  return 0;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed) {
  std::vector<oracles::OracleReport> reports;
  if (suite == "trees" || suite == "all") reports.push_back(oracles::run_trees_oracle(seed));
  if (suite == "schur" || suite == "all") reports.push_back(oracles::run_schur_oracle(seed));
  if (suite == "jacobian" || suite == "all") reports.push_back(oracles::run_jacobian_oracle(seed));
  if (suite == "ranking" || suite == "all")
    reports.push_back(oracles::run_ranking_oracle(seed, suite == "ranking"));
  if (reports.empty()) {
    std::cerr << "unknown suite: " << suite << " (expected trees|schur|jacobian|ranking|all)\n";
    return 1;
  }
  bool all_passed = true;
  for (const auto& r : reports) {
    std::printf("%-10s %s  %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL", r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale active graph-SLAM exploration simulator"};
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::string world_file;
  std::string out_dir = "out";
  std::string config_file;
  std::uint64_t seed = 0;
  bool dump_candidates = false;
  bool show_config = false;
  int jobs = -1;
  int epoch_cap = -1;

  auto* explore = app.add_subcommand("explore", "run an exploration episode");
  explore->add_option("--world", world_file, "world scene file")->required();
  explore->add_option("--seed", seed, "episode RNG seed");
  explore->add_option("--out", out_dir, "output directory");
  explore->add_option("--config", config_file, "key = value config file");
  explore->add_option("--jobs", jobs, "parallel candidate-evaluation workers");
  explore->add_option("--epoch-cap", epoch_cap, "maximum decision epochs");
  explore->add_flag("--dump-candidates", dump_candidates,
                    "write every hallucinated candidate graph");
  explore->add_flag("--print-config", show_config, "print the effective config and exit");

  std::string graph_file;
  auto* eval = app.add_subcommand("eval", "evaluate a serialized weighted pose-graph");
  eval->add_option("graph", graph_file, "VERTEX_SE2/EDGE_SE2 file")->required();

  std::string suite = "all";
  std::uint64_t oracle_seed = 12345;
  auto* oracle = app.add_subcommand("oracle", "run the numerical oracle suites");
  oracle->add_option("suite", suite, "trees|schur|jacobian|ranking|all");
  oracle->add_option("--seed", oracle_seed, "oracle RNG seed");

  bool top_print_config = false;
  app.add_flag("--print-config", top_print_config, "print the default config and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (top_print_config && app.get_subcommands().empty()) {
      print_config(cfg);
      return 0;
    }
    if (explore->parsed()) {
      if (!config_file.empty()) apply_config_file(cfg, config_file);
      if (jobs > 0) cfg.exploration.jobs = jobs;
      if (epoch_cap > 0) cfg.exploration.epoch_cap = epoch_cap;
      if (show_config) {
        print_config(cfg);
        return 0;
      }
      return cmd_explore(world_file, seed, out_dir, cfg, dump_candidates);
    }
    if (eval->parsed()) return cmd_eval(graph_file);
    if (oracle->parsed()) return cmd_oracle(suite, oracle_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << app.help();
  return 0;
}
