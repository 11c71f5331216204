#pragma once

#include <Eigen/Dense>

#include <map>
#include <vector>

#include "topoexplore/core.hpp"
#include "topoexplore/mapping.hpp"

namespace topo::hallucination {

struct NoveltyParams {
  double radius = 1.5;  // meters
};

struct PredictedLoopClosure {
  int branch_id;     // hallucinated vertex
  int existing_id;   // SLAM vertex
  double p_lc;       // (0, 1]
  int n_p;           // covisible point count
  std::vector<int> covisible_points;
};

struct HallucinatedGraph {
  core::WeightedPoseGraph graph;  // weights filled by weight_graph
  std::vector<int> branch_vertex_ids;
  std::vector<PredictedLoopClosure> predicted_lc_edges;
};

using MapPoints = std::map<int, Eigen::Vector2d>;

/// Estimated map points inside the pose's frustum with a line of sight that
/// crosses no occupied grid cell.
std::vector<int> expected_covisible(const core::Pose2& pose, const MapPoints& map_points,
                                    const core::SensorModel& sensor,
                                    const core::OccupancyGrid& grid);

/// Piecewise loop-closure probability: 0 below n_p_min, 1 above n_p_max,
/// n_p / n_p_max between.
double lc_probability(int n_p, const core::LoopClosureParams& params);

/// Copies the SLAM graph, chains the branch poses with odometry edges from
/// the current robot vertex, and predicts loop-closure edges from expected
/// covisibility. Covisible sets of existing vertices may be passed in to
/// share work across candidates.
HallucinatedGraph hallucinate_graph(
    const core::PoseGraph& slam_graph, const std::vector<core::Pose2>& branch_poses,
    const MapPoints& map_points, const core::SensorModel& sensor,
    const core::OccupancyGrid& grid, const core::LoopClosureParams& params,
    const std::map<int, std::vector<int>>* precomputed_covisible = nullptr);

/// Information of the most recent odometry edge in the SLAM graph.
core::InfoMatrix odom_edge_hessian(const core::PoseGraph& slam_graph);

/// H = p_lc * sum_i J_i^T Sigma_obs^-1 J_i over the covisible points.
core::InfoMatrix lc_edge_hessian(const core::Pose2& pose,
                                 const std::vector<Eigen::Vector2d>& covisible_points,
                                 double p_lc, const core::SensorModel& sensor);

/// Unknown-area fraction in a disc around the pose; out-of-grid cells count
/// as unknown.
double novelty_sigma(const core::Pose2& pose, const core::OccupancyGrid& grid, double radius);

/// Novelty scaling: H - (1/(1-alpha)) H with alpha = 1 + 1/sigma reduces to
/// (1 + sigma) H, with sigma = 0 the neutral fixed point.
core::InfoMatrix apply_novelty(const core::InfoMatrix& h, double sigma);

/// Weights every edge with the D-opt of its Hessian: existing SLAM edges
/// use their extracted information as-is; hallucinated edges get their
/// predicted Hessian scaled by the novelty at the far vertex.
/// `slam_weights`, when given, supplies precomputed D-opt values for the
/// leading SLAM edges (they are candidate-independent); `sampler` answers
/// the novelty disc queries from grid prefix sums. Returns hg.graph.
core::WeightedPoseGraph& weight_graph(HallucinatedGraph& hg, const core::OccupancyGrid& grid,
                                      const MapPoints& map_points,
                                      const core::SensorModel& sensor,
                                      const NoveltyParams& novelty,
                                      const std::vector<double>* slam_weights = nullptr,
                                      const mapping::UnknownDiscSampler* sampler = nullptr);

}  // namespace topo::hallucination
