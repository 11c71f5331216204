// End-to-end acceptance suite: one pass/fail line per criterion, nonzero
// exit when anything fails. Expects the bundled worlds directory as argv[1].
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "topoexplore/control.hpp"
#include "topoexplore/optimality.hpp"
#include "topoexplore/oracles.hpp"

using namespace topo;
using clock_t_ = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool passed, const std::string& detail) {
  std::printf("[%2d] %-28s %s  %s\n", index, name.c_str(), passed ? "pass" : "FAIL",
              detail.c_str());
  if (!passed) ++g_failures;
}

double seconds_since(clock_t_::time_point t0) {
  return std::chrono::duration<double>(clock_t_::now() - t0).count();
}

// ground-truth free-space raster: a cell is blocked when a wall passes
// through it, known-space coverage is measured against the reachable part
struct TruthGrid {
  core::OccupancyGrid grid{0.1, core::Pose2(0, 0, 0), 1, 1};
  std::vector<char> reachable;
};

TruthGrid rasterize_reachable(const core::World& world, const core::Pose2& start, double res) {
  const int w = static_cast<int>(std::ceil((world.bounds.xmax - world.bounds.xmin) / res));
  const int h = static_cast<int>(std::ceil((world.bounds.ymax - world.bounds.ymin) / res));
  TruthGrid t;
  t.grid = core::OccupancyGrid(res, core::Pose2(world.bounds.xmin, world.bounds.ymin, 0.0), w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t.grid.set(x, y, core::Cell::Free);
  for (const auto& wall : world.walls) {
    const double len = std::hypot(wall.x2 - wall.x1, wall.y2 - wall.y1);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (res * 0.25))));
    for (int s = 0; s <= steps; ++s) {
      const double u = static_cast<double>(s) / steps;
      const auto [cx, cy] = t.grid.world_to_cell(wall.x1 + u * (wall.x2 - wall.x1),
                                                 wall.y1 + u * (wall.y2 - wall.y1));
      if (t.grid.in_bounds(cx, cy)) t.grid.set(cx, cy, core::Cell::Occupied);
    }
  }
  t.reachable.assign(static_cast<std::size_t>(w) * h, 0);
  const auto [sx, sy] = t.grid.world_to_cell(start.x, start.y);
  std::queue<std::pair<int, int>> q;
  q.push({sx, sy});
  t.reachable[static_cast<std::size_t>(sy) * w + sx] = 1;
  const int dx4[] = {1, -1, 0, 0};
  const int dy4[] = {0, 0, 1, -1};
  while (!q.empty()) {
    const auto [cx, cy] = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      const int nx = cx + dx4[k];
      const int ny = cy + dy4[k];
      if (!t.grid.in_bounds(nx, ny)) continue;
      const std::size_t i = static_cast<std::size_t>(ny) * w + nx;
      if (t.reachable[i] || t.grid.at(nx, ny) == core::Cell::Occupied) continue;
      t.reachable[i] = 1;
      q.push({nx, ny});
    }
  }
  return t;
}

double reachable_coverage(const core::World& world, const core::Pose2& start,
                          const core::OccupancyGrid& observed) {
  const auto truth = rasterize_reachable(world, start, observed.resolution());
  std::size_t total = 0, known = 0;
  for (int y = 0; y < truth.grid.height(); ++y)
    for (int x = 0; x < truth.grid.width(); ++x) {
      if (!truth.reachable[static_cast<std::size_t>(y) * truth.grid.width() + x]) continue;
      ++total;
      const auto [wx, wy] = truth.grid.cell_to_world(x, y);
      const auto [ox, oy] = observed.world_to_cell(wx, wy);
      if (observed.in_bounds(ox, oy) && observed.at(ox, oy) != core::Cell::Unknown) ++known;
    }
  return total == 0 ? 0.0 : static_cast<double>(known) / total;
}

void criterion_1(std::uint64_t seed) {
  const auto t0 = clock_t_::now();
  const auto r = oracles::run_trees_oracle(seed);
  const double secs = seconds_since(t0);
  report(1, "matrix-tree oracle", r.passed && secs < 30.0,
         r.detail + ", " + std::to_string(secs) + " s");
}

void criterion_2(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> un(2, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracles::random_connected_graph(un(rng), 0.4, rng);
    const auto lap = optimality::weighted_laplacian(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.m);
    const double floor = 1e-9 * es.eigenvalues().maxCoeff();
    double log_prod = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > floor) log_prod += std::log(es.eigenvalues()[i]);
    const double n = static_cast<double>(g.base.num_vertices());
    const double log_nt = std::log(n) + optimality::log_tree_weight(g);
    worst = std::max(worst, std::abs(log_prod - log_nt) / std::max(1.0, std::abs(log_nt)));
  }
  report(2, "eigenvalue identity", worst < 1e-6, "worst rel err " + std::to_string(worst));
}

void criterion_3(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> un(2, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::MatrixXd m = oracles::random_spd(un(rng), rng);
    const double expected = std::pow(m.determinant(), 1.0 / m.rows());
    const double got = optimality::dopt_matrix(m);
    worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
  }
  report(3, "d-opt closed form", worst < 1e-8, "worst rel err " + std::to_string(worst));
}

void criterion_6() {
  core::LoopClosureParams params;  // min 3, max 6
  const double expected[11] = {0, 0, 0, 3.0 / 6, 4.0 / 6, 5.0 / 6, 1, 1, 1, 1, 1};
  bool exact = true;
  for (int np = 0; np <= 10; ++np)
    exact = exact && hallucination::lc_probability(np, params) == expected[np];
  report(6, "lc probability exactness", exact, "n_p 0..10 against the piecewise values");
}

void criterion_7(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Matrix3d a = oracles::random_spd(3, rng);
  const core::InfoMatrix h(a);
  bool ok = hallucination::apply_novelty(h, 0.0).m == h.m;  // bit-exact fixed point
  double worst = 0.0;
  for (double sigma : {0.0, 0.25, 0.5, 1.0}) {
    const double got = optimality::dopt_matrix(hallucination::apply_novelty(h, sigma).m);
    const double expected = (1.0 + sigma) * optimality::dopt_matrix(h.m);
    worst = std::max(worst, std::abs(got - expected) / expected);
  }
  ok = ok && worst < 1e-10;
  report(7, "novelty scaling", ok, "worst factor err " + std::to_string(worst));
}

struct EpisodeRuns {
  std::vector<std::string> names;
  std::vector<core::World> worlds;
  std::vector<control::EpisodeResult> results;
  std::vector<double> runtimes;
  core::Pose2 start{0, 0, 0};
  control::ExplorationConfig config;
  std::uint64_t seed = 7;
};

EpisodeRuns run_bundled_worlds(const std::string& worlds_dir) {
  EpisodeRuns runs;
  runs.names = {"single_room", "two_rooms", "four_room_loop"};
  for (const auto& name : runs.names) {
    runs.worlds.push_back(core::load_world(worlds_dir + "/" + name + ".txt"));
    const auto t0 = clock_t_::now();
    runs.results.push_back(
        control::run_episode(runs.worlds.back(), runs.start, runs.config, runs.seed, true));
    runs.runtimes.push_back(seconds_since(t0));
  }
  return runs;
}

void criterion_9(const EpisodeRuns& runs) {
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < runs.results.size(); ++i) {
    const auto& res = runs.results[i];
    const double cov = reachable_coverage(runs.worlds[i], runs.start, res.final_grid);
    const bool world_ok = !res.log.incomplete && cov >= 0.9 && runs.runtimes[i] < 60.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s cov %.3f %.1fs%s ", runs.names[i].c_str(), cov,
                  runs.runtimes[i], world_ok ? "" : " <-");
    detail += buf;
    ok = ok && world_ok;
  }
  const bool lc_ok = runs.results.back().had_certain_loop_closure;
  if (!lc_ok) detail += "no certain LC in loop world ";
  report(9, "end-to-end exploration", ok && lc_ok, detail);
}

void criterion_10(const EpisodeRuns& runs) {
  double eval_sum = 0.0;
  std::size_t eval_count = 0;
  double decision_sum = 0.0, total_sum = 0.0;
  for (const auto& res : runs.results) {
    for (const auto& epoch_cands : res.per_epoch_candidates)
      for (const auto& c : epoch_cands) {
        eval_sum += c.eval_wall_time;
        ++eval_count;
      }
    for (const auto& e : res.log.epochs) decision_sum += e.decision_time_s;
    total_sum += res.log.total_wall_time_s;
  }
  const double mean_eval = eval_count ? eval_sum / eval_count : 0.0;
  const double frac = total_sum > 0.0 ? decision_sum / total_sum : 1.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mean eval %.2f ms over %zu, decision share %.1f%%",
                mean_eval * 1e3, eval_count, frac * 100.0);
  report(10, "decision-cost proxy", mean_eval <= 0.05 && frac <= 0.10, buf);
}

void criterion_11(const EpisodeRuns& runs) {
  bool ok = true;
  for (std::size_t i = 0; i < runs.worlds.size(); ++i) {
    const auto again =
        control::run_episode(runs.worlds[i], runs.start, runs.config, runs.seed, false);
    ok = ok && again.log.to_csv() == runs.results[i].log.to_csv();
  }
  report(11, "seeded determinism", ok, "re-run logs byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string worlds_dir = argc > 1 ? argv[1] : "worlds";
  const std::uint64_t seed = 20240811;

  criterion_1(seed);
  criterion_2(seed + 1);
  criterion_3(seed + 2);
  {
    const auto r = oracles::run_schur_oracle(seed + 3);
    report(4, "schur identity", r.passed, r.detail);
  }
  {
    const auto r = oracles::run_jacobian_oracle(seed + 4);
    report(5, "jacobian finite differences", r.passed, r.detail);
  }
  criterion_6();
  criterion_7(seed + 5);
  {
    const auto t0 = clock_t_::now();
    const auto r = oracles::run_ranking_oracle(seed + 6);
    const double secs = seconds_since(t0);
    report(8, "ranking fidelity", r.passed && secs < 120.0,
           r.detail + ", " + std::to_string(secs) + " s");
  }

  try {
    const auto runs = run_bundled_worlds(worlds_dir);
    criterion_9(runs);
    criterion_10(runs);
    criterion_11(runs);
  } catch (const std::exception& e) {
    report(9, "end-to-end exploration", false, std::string("exception: ") + e.what());
    report(10, "decision-cost proxy", false, "skipped");
    report(11, "seeded determinism", false, "skipped");
  }

  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures ? 1 : 0;
}
