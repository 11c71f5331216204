#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "topoexplore/core.hpp"
#include "topoexplore/hallucination.hpp"
#include "topoexplore/mapping.hpp"
#include "topoexplore/optimality.hpp"
#include "topoexplore/planning.hpp"

namespace topo::control {

struct ExplorationConfig {
  core::SensorModel sensor;
  core::LoopClosureParams lc_params;
  hallucination::NoveltyParams novelty;
  double grid_resolution = 0.1;      // m / cell
  double inflation_radius = 0.25;    // m
  double vertex_spacing = 1.0;       // m between hallucinated vertices
  double sense_interval = 0.5;       // m between sense points while moving
  double mean_shift_bandwidth = 0.75;
  double rrt_step = 0.5;
  int rrt_iterations = 200;
  int min_info_radius_cells = 10;
  int max_candidate_age = 3;  // epochs
  int theta_covis = 3;
  int epoch_cap = 200;
  int jobs = 1;  // parallel candidate-evaluation workers
};

struct CandidateEvaluation {
  mapping::FrontierCandidate frontier;
  planning::PlannedPath path;
  core::WeightedPoseGraph graph;
  double utility = 0.0;      // dopt_graph of the hallucinated weighted graph
  double eval_wall_time = 0.0;  // seconds
  int n_predicted_lc = 0;
  bool has_certain_lc = false;  // some predicted LC edge with p_lc = 1
};

struct EpochRecord {
  int epoch = 0;
  core::Pose2 estimate;
  core::Pose2 truth;
  int n_frontiers = 0;
  int chosen_frontier = -1;
  double utility = 0.0;
  std::vector<double> all_utilities;
  double coverage = 0.0;      // known-cell fraction of the grid
  double decision_time_s = 0.0;
  double epoch_time_s = 0.0;
};

struct EpisodeLog {
  std::vector<EpochRecord> epochs;
  bool incomplete = false;  // epoch cap reached
  double total_wall_time_s = 0.0;
  double final_position_error = 0.0;  // |estimate - truth| at termination

  /// Fixed-header CSV, one row per epoch. Timing columns are written as
  /// zero unless include_timings is set, so seeded runs stay byte-identical.
  std::string to_csv(bool include_timings = false) const;
};

/// Frozen per-epoch view shared by all candidate evaluations.
struct Snapshot {
  core::PoseGraph slam_graph;
  core::OccupancyGrid grid;
  hallucination::MapPoints map_points;
  std::map<int, std::vector<int>> slam_covisible;  // per-vertex expected covisibility
  planning::CostGrid costmap;
  planning::DijkstraTree plan_tree;  // shortest-path tree rooted at the robot
  std::vector<double> slam_edge_weights;  // per-edge D-opt of slam_graph, in edge order
  mapping::UnknownDiscSampler novelty_sampler;  // prefix sums over `grid`
  // per-epoch factorization of the SLAM graph's reduced Laplacian; null
  // falls back to the direct dopt_graph computation
  std::shared_ptr<const optimality::BaseTreeEvaluator> tree_evaluator;
  core::Pose2 robot_estimate;
  ExplorationConfig config;
};

/// plan -> place vertices -> hallucinate -> weight -> dopt_graph.
/// Returns false when planning finds the frontier unreachable.
bool evaluate_candidate(const mapping::FrontierCandidate& frontier, const Snapshot& snapshot,
                        CandidateEvaluation& out);

/// Maximum utility; ties (1e-9 relative) broken by shortest path cost, then
/// lowest frontier id. Throws on an empty list.
const CandidateEvaluation& select_frontier(const std::vector<CandidateEvaluation>& evals);

struct EpisodeResult {
  EpisodeLog log;
  core::PoseGraph final_graph;
  core::OccupancyGrid final_grid;
  std::vector<std::vector<CandidateEvaluation>> per_epoch_candidates;  // when requested
  bool had_certain_loop_closure = false;  // some predicted LC edge had p_lc = 1
};

EpisodeResult run_episode(const core::World& world, const core::Pose2& start,
                          const ExplorationConfig& config, std::uint64_t seed,
                          bool keep_candidates = false);

}  // namespace topo::control
