#include "topoexplore/hallucination.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "topoexplore/frontend.hpp"
#include "topoexplore/optimality.hpp"

namespace topo::hallucination {

using core::Cell;
using core::Pose2;

std::vector<int> expected_covisible(const Pose2& pose, const MapPoints& map_points,
                                    const core::SensorModel& sensor,
                                    const core::OccupancyGrid& grid) {
  std::vector<int> out;
  const double march = grid.resolution() * 0.5;
  for (const auto& [id, pt] : map_points) {
    const double dx = pt.x() - pose.x;
    const double dy = pt.y() - pose.y;
    const double range = std::hypot(dx, dy);
    if (range <= 0.0 || range > sensor.max_range) continue;
    const double bearing = core::normalize_angle(std::atan2(dy, dx) - pose.theta);
    if (std::abs(bearing) > sensor.fov / 2.0) continue;
    bool blocked = false;
    for (double s = march; s < range - march; s += march) {
      const auto [cx, cy] = grid.world_to_cell(pose.x + s * dx / range, pose.y + s * dy / range);
      if (grid.in_bounds(cx, cy) && grid.at(cx, cy) == Cell::Occupied) {
        blocked = true;
        break;
      }
    }
    if (!blocked) out.push_back(id);
  }
  return out;  // MapPoints is ordered, so ids come out sorted
}

double lc_probability(int n_p, const core::LoopClosureParams& params) {
  params.validate();
  if (n_p < 0) throw std::invalid_argument("n_p must be nonnegative");
  if (n_p < params.n_p_min) return 0.0;
  if (n_p > params.n_p_max) return 1.0;
  return static_cast<double>(n_p) / params.n_p_max;
}

HallucinatedGraph hallucinate_graph(const core::PoseGraph& slam_graph,
                                    const std::vector<Pose2>& branch_poses,
                                    const MapPoints& map_points,
                                    const core::SensorModel& sensor,
                                    const core::OccupancyGrid& grid,
                                    const core::LoopClosureParams& params,
                                    const std::map<int, std::vector<int>>* precomputed_covisible) {
  if (slam_graph.num_vertices() == 0) throw std::invalid_argument("empty SLAM graph");

  HallucinatedGraph hg;
  hg.graph.base = slam_graph;  // graphs are value types: the original is untouched

  std::map<int, std::vector<int>> covis_cache;
  auto covis_of = [&](int id, const Pose2& p) -> const std::vector<int>& {
    if (precomputed_covisible) {
      auto it = precomputed_covisible->find(id);
      if (it != precomputed_covisible->end()) return it->second;
    }
    auto it = covis_cache.find(id);
    if (it == covis_cache.end())
      it = covis_cache.emplace(id, expected_covisible(p, map_points, sensor, grid)).first;
    return it->second;
  };

  const core::InfoMatrix odom_info =
      slam_graph.num_edges() > 0 ? odom_edge_hessian(slam_graph)
                                 : core::InfoMatrix(Eigen::Matrix3d::Identity());

  int prev_id = slam_graph.last_vertex_id();
  Pose2 prev_pose = slam_graph.pose_of(prev_id);
  const auto slam_vertices = slam_graph.vertices();  // snapshot before branch insertion

  for (std::size_t b = 0; b < branch_poses.size(); ++b) {
    const int bid = core::kHallucinatedIdOffset + static_cast<int>(b);
    const Pose2& bpose = branch_poses[b];

    std::vector<core::GraphEdge> edges;
    core::GraphEdge odo;
    odo.i = prev_id;
    odo.k = bid;
    odo.kind = core::EdgeKind::Odometry;
    odo.rel = core::between(prev_pose, bpose);
    odo.info = odom_info;
    edges.push_back(odo);

    const std::vector<int> covis_b = expected_covisible(bpose, map_points, sensor, grid);
    std::vector<int> common;
    const bool can_close = static_cast<int>(covis_b.size()) >= params.n_p_min;
    for (const auto& [vid, vpose] : slam_vertices) {
      if (!can_close) break;
      const std::vector<int>& covis_v = covis_of(vid, vpose);
      if (static_cast<int>(covis_v.size()) < params.n_p_min) continue;
      common.clear();
      std::set_intersection(covis_b.begin(), covis_b.end(), covis_v.begin(), covis_v.end(),
                            std::back_inserter(common));
      const int n_p = static_cast<int>(common.size());
      const double p = lc_probability(n_p, params);
      if (p <= 0.0) continue;
      core::GraphEdge lc;
      lc.i = vid;
      lc.k = bid;
      lc.kind = core::EdgeKind::LoopClosure;
      lc.rel = core::between(vpose, bpose);
      lc.info = core::InfoMatrix();  // filled by weight_graph
      edges.push_back(lc);
      hg.predicted_lc_edges.push_back({bid, vid, p, n_p, std::move(common)});
    }

    // branch ids are fresh, so the duplicate scan in add_vertex is skipped
    hg.graph.base.add_vertex_unchecked(bid, bpose);
    for (const auto& edge : edges) hg.graph.base.add_edge_unchecked(edge);
    hg.branch_vertex_ids.push_back(bid);
    prev_id = bid;
    prev_pose = bpose;
  }
  return hg;
}

core::InfoMatrix odom_edge_hessian(const core::PoseGraph& slam_graph) {
  const auto& edges = slam_graph.edges();
  for (auto it = edges.rbegin(); it != edges.rend(); ++it)
    if (it->kind == core::EdgeKind::Odometry) return it->info;
  throw std::invalid_argument("graph has no odometry edge");
}

core::InfoMatrix lc_edge_hessian(const Pose2& pose,
                                 const std::vector<Eigen::Vector2d>& covisible_points,
                                 double p_lc, const core::SensorModel& sensor) {
  if (covisible_points.empty()) throw std::invalid_argument("empty covisible set");
  if (!(p_lc > 0.0 && p_lc <= 1.0)) throw std::invalid_argument("p_lc must be in (0, 1]");
  Eigen::Matrix2d info_obs = Eigen::Matrix2d::Zero();
  info_obs(0, 0) = 1.0 / (sensor.range_noise_std * sensor.range_noise_std + 1e-300);
  info_obs(1, 1) = 1.0 / (sensor.bearing_noise_std * sensor.bearing_noise_std + 1e-300);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (const auto& pt : covisible_points) {
    const auto j = frontend::observation_jacobian(pose, pt);
    h += j.transpose() * info_obs * j;
  }
  return core::InfoMatrix(p_lc * h);
}

double novelty_sigma(const Pose2& pose, const core::OccupancyGrid& grid, double radius) {
  return mapping::unknown_fraction(grid, pose.x, pose.y, radius);
}

core::InfoMatrix apply_novelty(const core::InfoMatrix& h, double sigma) {
  if (sigma < 0.0 || sigma > 1.0) throw std::invalid_argument("sigma must be in [0, 1]");
  // H - (1/(1-alpha)) H with alpha = 1 + 1/sigma; 1/(1-alpha) = -sigma
  return core::InfoMatrix((1.0 + sigma) * h.m);
}

core::WeightedPoseGraph& weight_graph(HallucinatedGraph& hg, const core::OccupancyGrid& grid,
                                      const MapPoints& map_points,
                                      const core::SensorModel& sensor,
                                      const NoveltyParams& novelty,
                                      const std::vector<double>* slam_weights,
                                      const mapping::UnknownDiscSampler* sampler) {
  auto is_branch = [](int id) { return id >= core::kHallucinatedIdOffset; };

  core::WeightedPoseGraph& g = hg.graph;
  g.weights.clear();
  g.weights.reserve(g.base.num_edges());
  // novelty cache per branch vertex (several edges share the far vertex)
  std::vector<double> sigma_of_branch(hg.branch_vertex_ids.size(), -1.0);
  // LC edges were appended in the same order as predicted_lc_edges
  std::size_t next_lc = 0;
  std::vector<Eigen::Vector2d> pts;
  for (std::size_t j = 0; j < g.base.num_edges(); ++j) {
    const core::GraphEdge& e = g.base.edges()[j];
    if (!is_branch(e.i) && !is_branch(e.k)) {
      // existing SLAM edge: region already observed, no novelty scaling
      g.weights.push_back(slam_weights && j < slam_weights->size()
                              ? (*slam_weights)[j]
                              : optimality::dopt_matrix(e.info.m));
      continue;
    }
    const int far_id = is_branch(e.k) ? e.k : e.i;
    const Pose2& far_pose = g.base.pose_of(far_id);
    core::InfoMatrix h;
    if (e.kind == core::EdgeKind::LoopClosure) {
      if (next_lc >= hg.predicted_lc_edges.size())
        throw std::logic_error("loop-closure edges out of sync with predictions");
      const PredictedLoopClosure& lc = hg.predicted_lc_edges[next_lc++];
      if (lc.branch_id != far_id)
        throw std::logic_error("loop-closure edges out of sync with predictions");
      pts.clear();
      pts.reserve(lc.covisible_points.size());
      for (int pid : lc.covisible_points) pts.push_back(map_points.at(pid));
      h = lc_edge_hessian(far_pose, pts, lc.p_lc, sensor);
    } else {
      h = e.info;  // odometry Hessian copied from the last SLAM edge
    }
    const std::size_t bslot = static_cast<std::size_t>(far_id - core::kHallucinatedIdOffset);
    double& sigma = sigma_of_branch.at(bslot);
    if (sigma < 0.0)
      sigma = sampler ? sampler->fraction(far_pose.x, far_pose.y, novelty.radius)
                      : novelty_sigma(far_pose, grid, novelty.radius);
    const core::InfoMatrix scaled = apply_novelty(h, sigma);
    g.base.set_edge_info(j, scaled);
    g.weights.push_back(optimality::dopt_matrix(scaled.m));
  }
  g.validate();
  return g;
}

}  // namespace topo::hallucination
