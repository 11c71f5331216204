#include "topoexplore/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <thread>

#include "topoexplore/frontend.hpp"
#include "topoexplore/optimality.hpp"

namespace topo::control {

using core::Cell;
using core::Pose2;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void append_num(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

}  // namespace

std::string EpisodeLog::to_csv(bool include_timings) const {
  std::string out =
      "epoch,x_est,y_est,theta_est,x_true,y_true,theta_true,n_frontiers,chosen_frontier,"
      "utility,coverage,decision_time_s,epoch_time_s\n";
  for (const auto& r : epochs) {
    out += std::to_string(r.epoch);
    for (double v : {r.estimate.x, r.estimate.y, r.estimate.theta, r.truth.x, r.truth.y,
                     r.truth.theta}) {
      out += ',';
      append_num(out, v);
    }
    out += ',' + std::to_string(r.n_frontiers);
    out += ',' + std::to_string(r.chosen_frontier);
    out += ',';
    append_num(out, r.utility);
    out += ',';
    append_num(out, r.coverage);
    out += ',';
    append_num(out, include_timings ? r.decision_time_s : 0.0);
    out += ',';
    append_num(out, include_timings ? r.epoch_time_s : 0.0);
    out += '\n';
  }
  return out;
}

bool evaluate_candidate(const mapping::FrontierCandidate& frontier, const Snapshot& snapshot,
                        CandidateEvaluation& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = snapshot.config;
  auto planned = planning::extract_path(snapshot.plan_tree, snapshot.costmap, snapshot.grid,
                                        {frontier.x, frontier.y});
  if (!planned) return false;

  const auto branch = planning::place_vertices(*planned, cfg.vertex_spacing);
  auto hg = hallucination::hallucinate_graph(snapshot.slam_graph, branch, snapshot.map_points,
                                             cfg.sensor, snapshot.grid, cfg.lc_params,
                                             &snapshot.slam_covisible);
  out.frontier = frontier;
  out.path = *planned;
  out.n_predicted_lc = static_cast<int>(hg.predicted_lc_edges.size());
  out.has_certain_lc = std::any_of(hg.predicted_lc_edges.begin(), hg.predicted_lc_edges.end(),
                                   [](const auto& lc) { return lc.p_lc >= 1.0; });
  hallucination::weight_graph(hg, snapshot.grid, snapshot.map_points, cfg.sensor, cfg.novelty,
                              &snapshot.slam_edge_weights,
                              snapshot.novelty_sampler.ready() ? &snapshot.novelty_sampler
                                                               : nullptr);
  out.graph = std::move(hg.graph);
  out.utility = snapshot.tree_evaluator ? snapshot.tree_evaluator->dopt(out.graph)
                                        : optimality::dopt_graph(out.graph);
  out.eval_wall_time = seconds_since(t0);
  return true;
}

const CandidateEvaluation& select_frontier(const std::vector<CandidateEvaluation>& evals) {
  if (evals.empty()) throw std::invalid_argument("no candidates to select from");
  const CandidateEvaluation* best = &evals[0];
  for (const auto& e : evals) {
    const double scale = std::max({std::abs(best->utility), std::abs(e.utility), 1e-300});
    const bool tie = std::abs(e.utility - best->utility) <= 1e-9 * scale;
    if (tie) {
      if (e.path.cost < best->path.cost ||
          (e.path.cost == best->path.cost && e.frontier.id < best->frontier.id))
        best = &e;
    } else if (e.utility > best->utility) {
      best = &e;
    }
  }
  return *best;
}

namespace {

struct EpisodeState {
  Pose2 true_pose;
  Pose2 est_pose;
  std::vector<std::pair<int, Pose2>> poses;  // dead-reckoned estimates
  std::vector<frontend::Observation> observations;
  hallucination::MapPoints landmark_estimates;
  std::map<int, int> landmark_obs_count;
  core::OccupancyGrid grid;
  std::mt19937_64 rng;
  int next_pose_id = 0;
};

void sense(EpisodeState& st, const core::World& world, const ExplorationConfig& cfg) {
  const int pid = st.next_pose_id++;
  st.poses.emplace_back(pid, st.est_pose);
  auto obs = frontend::observe(st.true_pose, world, cfg.sensor, st.rng);
  for (auto& o : obs) {
    o.pose_id = pid;
    // landmark position estimate from the estimated pose, incremental mean
    const double a = st.est_pose.theta + o.bearing;
    const Eigen::Vector2d est(st.est_pose.x + o.range * std::cos(a),
                              st.est_pose.y + o.range * std::sin(a));
    auto& n = st.landmark_obs_count[o.landmark_id];
    auto it = st.landmark_estimates.find(o.landmark_id);
    if (it == st.landmark_estimates.end()) {
      st.landmark_estimates.emplace(o.landmark_id, est);
    } else {
      it->second += (est - it->second) / (n + 1.0);
    }
    ++n;
    st.observations.push_back(o);
  }
  mapping::integrate_scan(st.grid, st.true_pose, world, cfg.sensor);
}

void move_to(EpisodeState& st, const Pose2& target, const ExplorationConfig& cfg) {
  const Pose2 prev_true = st.true_pose;
  st.true_pose = target;
  core::RelativePose2 rel = core::between(prev_true, target);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rel.dx += gauss(st.rng) * cfg.sensor.odom_noise_std[0];
  rel.dy += gauss(st.rng) * cfg.sensor.odom_noise_std[1];
  rel.dtheta = core::normalize_angle(rel.dtheta + gauss(st.rng) * cfg.sensor.odom_noise_std[2]);
  st.est_pose = core::compose(st.est_pose, rel);
}

core::PoseGraph rebuild_slam_graph(const EpisodeState& st, const ExplorationConfig& cfg) {
  if (st.observations.empty()) {
    core::PoseGraph g;
    for (std::size_t i = 0; i < st.poses.size(); ++i) {
      if (i == 0) {
        g.add_first_vertex(st.poses[i].first, st.poses[i].second);
      } else {
        core::GraphEdge e;
        e.i = st.poses[i - 1].first;
        e.k = st.poses[i].first;
        e.kind = core::EdgeKind::Odometry;
        e.rel = core::between(st.poses[i - 1].second, st.poses[i].second);
        e.info = core::InfoMatrix(Eigen::Matrix3d::Identity());
        g.add_vertex(st.poses[i].first, st.poses[i].second, {e});
      }
    }
    return g;
  }
  const auto h = frontend::build_camera_point_hessian(st.poses, st.observations,
                                                      st.landmark_estimates, cfg.sensor);
  const auto schur = frontend::schur_reduce(h);
  return frontend::extract_pose_graph(schur, st.poses, cfg.sensor, cfg.theta_covis);
}

}  // namespace

EpisodeResult run_episode(const core::World& world, const Pose2& start,
                          const ExplorationConfig& config, std::uint64_t seed,
                          bool keep_candidates) {
  const auto episode_t0 = std::chrono::steady_clock::now();
  world.validate();
  config.sensor.validate();
  config.lc_params.validate();

  const double res = config.grid_resolution;
  const int width =
      std::max(1, static_cast<int>(std::ceil((world.bounds.xmax - world.bounds.xmin) / res)));
  const int height =
      std::max(1, static_cast<int>(std::ceil((world.bounds.ymax - world.bounds.ymin) / res)));

  EpisodeState st;
  st.true_pose = start;
  st.est_pose = start;
  st.grid = core::OccupancyGrid(res, Pose2(world.bounds.xmin, world.bounds.ymin, 0.0), width,
                                height);
  st.rng.seed(seed);

  EpisodeResult result;
  sense(st, world, config);

  mapping::RrtFrontierDetector rrt({start.x, start.y}, config.rrt_step, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<mapping::FrontierCandidate> candidates;
  int next_candidate_id = 0;

  for (int epoch = 0; epoch < config.epoch_cap; ++epoch) {
    const auto epoch_t0 = std::chrono::steady_clock::now();

    // --- frontier detection over the frozen grid
    std::vector<mapping::Point2> detected;
    std::vector<mapping::Detector> detected_by;
    for (const auto& c : mapping::detect_frontiers_edge(st.grid)) {
      const auto [wx, wy] = st.grid.cell_to_world(c.cx, c.cy);
      detected.push_back({wx, wy});
      detected_by.push_back(mapping::Detector::Edge);
    }
    for (const auto& p : rrt.grow(st.grid, config.rrt_iterations)) {
      detected.push_back(p);
      detected_by.push_back(mapping::Detector::Rrt);
    }
    for (const auto& cl : mapping::cluster_mean_shift(detected, config.mean_shift_bandwidth)) {
      // snap the centroid into the nearest free cell
      auto [ccx, ccy] = st.grid.world_to_cell(cl.centroid.x, cl.centroid.y);
      bool placed = false;
      for (int r = 0; r <= 5 && !placed; ++r) {
        for (int dy = -r; dy <= r && !placed; ++dy)
          for (int dx = -r; dx <= r && !placed; ++dx) {
            const int cx = ccx + dx;
            const int cy = ccy + dy;
            if (st.grid.in_bounds(cx, cy) && st.grid.at(cx, cy) == Cell::Free) {
              mapping::FrontierCandidate fc;
              fc.id = next_candidate_id++;
              const auto [wx, wy] = st.grid.cell_to_world(cx, cy);
              fc.x = wx;
              fc.y = wy;
              fc.cluster_size = cl.count;
              fc.created_at = epoch;
              candidates.push_back(fc);
              placed = true;
            }
          }
      }
    }

    // --- filtering with a reachability field from the robot
    const auto costmap = planning::inflate_costmap(st.grid, config.inflation_radius);
    auto [rcx, rcy] = costmap.world_to_cell(st.true_pose.x, st.true_pose.y);
    if (costmap.lethal[costmap.idx(rcx, rcy)]) {
      // robot sits inside the inflation ring; relax by planning from the
      // nearest non-lethal cell
      bool found = false;
      for (int r = 1; r <= 10 && !found; ++r)
        for (int dy = -r; dy <= r && !found; ++dy)
          for (int dx = -r; dx <= r && !found; ++dx)
            if (costmap.in_bounds(rcx + dx, rcy + dy) &&
                !costmap.lethal[costmap.idx(rcx + dx, rcy + dy)]) {
              rcx += dx;
              rcy += dy;
              found = true;
            }
      if (!found) break;
    }
    const auto [startx, starty] = costmap.cell_to_world(rcx, rcy);
    auto plan_tree = planning::dijkstra_tree(costmap, {startx, starty});
    const auto& field = plan_tree.dist;
    auto reachable = [&](double x, double y) {
      const auto [cx, cy] = costmap.world_to_cell(x, y);
      if (!costmap.in_bounds(cx, cy)) return false;
      if (std::isfinite(field[costmap.idx(cx, cy)])) return true;
      // frontier goals bordering unknown are exempt from lethality: probe
      // their non-lethal neighbors
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (costmap.in_bounds(cx + dx, cy + dy) &&
              std::isfinite(field[costmap.idx(cx + dx, cy + dy)]))
            return true;
      return false;
    };
    candidates = mapping::filter_frontiers(candidates, st.grid, reachable,
                                           config.min_info_radius_cells,
                                           config.max_candidate_age, epoch);

    if (candidates.empty()) break;  // absence of candidate frontiers

    // --- per-epoch snapshot: the SLAM graph, covisibility cache, and
    // shortest-path tree are mapping products shared by every candidate
    Snapshot snapshot;
    snapshot.slam_graph = rebuild_slam_graph(st, config);
    snapshot.grid = st.grid;
    snapshot.map_points = st.landmark_estimates;
    snapshot.costmap = costmap;
    snapshot.plan_tree = std::move(plan_tree);
    snapshot.robot_estimate = Pose2(startx, starty, st.true_pose.theta);
    snapshot.config = config;
    for (const auto& [id, p] : snapshot.slam_graph.vertices())
      snapshot.slam_covisible[id] = hallucination::expected_covisible(
          p, snapshot.map_points, config.sensor, snapshot.grid);
    snapshot.slam_edge_weights.reserve(snapshot.slam_graph.num_edges());
    for (const auto& e : snapshot.slam_graph.edges())
      snapshot.slam_edge_weights.push_back(optimality::dopt_matrix(e.info.m));
    snapshot.novelty_sampler = mapping::UnknownDiscSampler(snapshot.grid);
    {
      core::WeightedPoseGraph weighted_slam{snapshot.slam_graph, snapshot.slam_edge_weights};
      auto evaluator = std::make_shared<optimality::BaseTreeEvaluator>(weighted_slam);
      if (evaluator->usable()) snapshot.tree_evaluator = std::move(evaluator);
    }

    // --- candidate evaluation
    const auto decision_t0 = std::chrono::steady_clock::now();
    std::vector<CandidateEvaluation> evals(candidates.size());
    std::vector<char> ok(candidates.size(), 0);
    auto eval_range = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        ok[i] = evaluate_candidate(candidates[i], snapshot, evals[i]) ? 1 : 0;
    };
    if (config.jobs <= 1 || candidates.size() < 2) {
      eval_range(0, candidates.size());
    } else {
      const std::size_t nw = std::min<std::size_t>(config.jobs, candidates.size());
      std::vector<std::thread> workers;
      const std::size_t chunk = (candidates.size() + nw - 1) / nw;
      for (std::size_t w = 0; w < nw; ++w)
        workers.emplace_back(eval_range, w * chunk,
                             std::min(candidates.size(), (w + 1) * chunk));
      for (auto& t : workers) t.join();
    }
    std::vector<CandidateEvaluation> valid;
    for (std::size_t i = 0; i < evals.size(); ++i)
      if (ok[i]) valid.push_back(std::move(evals[i]));
    const double decision_time = seconds_since(decision_t0);
    if (valid.empty()) break;

    for (const auto& e : valid)
      if (e.has_certain_lc) result.had_certain_loop_closure = true;

    const CandidateEvaluation& chosen = select_frontier(valid);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.estimate = st.est_pose;
    rec.truth = st.true_pose;
    rec.n_frontiers = static_cast<int>(valid.size());
    rec.chosen_frontier = chosen.frontier.id;
    rec.utility = chosen.utility;
    for (const auto& e : valid) rec.all_utilities.push_back(e.utility);
    const double total_cells = static_cast<double>(st.grid.width()) * st.grid.height();
    rec.coverage = 1.0 - static_cast<double>(st.grid.count(Cell::Unknown)) / total_cells;
    rec.decision_time_s = decision_time;

    if (keep_candidates) result.per_epoch_candidates.push_back(valid);

    // --- execute: follow the path, sensing every sense_interval meters
    const auto sense_points = planning::place_vertices(chosen.path, config.sense_interval);
    for (const auto& target : sense_points) {
      const auto [tcx, tcy] = st.grid.world_to_cell(target.x, target.y);
      if (st.grid.in_bounds(tcx, tcy) && st.grid.at(tcx, tcy) == Cell::Occupied)
        break;  // path blocked by newly sensed obstacle: re-decide
      move_to(st, target, config);
      sense(st, world, config);
    }
    // drop the reached frontier so it does not linger as a stale candidate
    std::erase_if(candidates, [&](const mapping::FrontierCandidate& c) {
      return c.id == chosen.frontier.id;
    });

    rec.epoch_time_s = seconds_since(epoch_t0);
    result.log.epochs.push_back(rec);

    if (epoch == config.epoch_cap - 1) result.log.incomplete = true;
  }

  result.final_graph = rebuild_slam_graph(st, config);
  result.final_grid = st.grid;
  result.log.total_wall_time_s = seconds_since(episode_t0);
  result.log.final_position_error =
      std::hypot(st.est_pose.x - st.true_pose.x, st.est_pose.y - st.true_pose.y);
  return result;
}

}  // namespace topo::control
