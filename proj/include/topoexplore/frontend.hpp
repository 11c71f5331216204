#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "topoexplore/core.hpp"

namespace topo::frontend {

struct Observation {
  int pose_id;
  int landmark_id;
  double range;    // meters, in (0, max_range]
  double bearing;  // radians, relative to robot heading
};

/// Noisy range-bearing observations of every landmark inside the sensor
/// frustum with an unobstructed line of sight. Deterministic per seed.
std::vector<Observation> observe(const core::Pose2& true_pose, const core::World& world,
                                 const core::SensorModel& sensor, std::mt19937_64& rng);
std::vector<Observation> observe(const core::Pose2& true_pose, const core::World& world,
                                 const core::SensorModel& sensor, std::uint64_t rng_seed);

/// d(range, bearing) / d(x, y, theta) at the given state.
Eigen::Matrix<double, 2, 3> observation_jacobian(const core::Pose2& pose,
                                                 const Eigen::Vector2d& landmark);

/// d(range, bearing) / d(lx, ly): the landmark-side block of the same
/// residual.
Eigen::Matrix2d landmark_jacobian(const core::Pose2& pose, const Eigen::Vector2d& landmark);

struct CameraPointHessian {
  Eigen::MatrixXd h_c;   // (3 n_poses) x (3 n_poses)
  Eigen::MatrixXd h_p;   // (2 n_points) x (2 n_points), block-diagonal
  Eigen::MatrixXd h_cp;  // coupling
  std::map<int, int> pose_index;   // pose id -> block index
  std::map<int, int> point_index;  // landmark id -> block index
  /// observer pose ids per landmark block index, sorted
  std::vector<std::vector<int>> observers;
};

/// Gauss-Newton accumulation J^T Sigma_obs^-1 J over all observations.
/// Landmarks with zero observations are absent from h_p.
CameraPointHessian build_camera_point_hessian(
    const std::vector<std::pair<int, core::Pose2>>& poses,
    const std::vector<Observation>& observations,
    const std::map<int, Eigen::Vector2d>& landmark_estimates, const core::SensorModel& sensor);

struct SchurResult {
  Eigen::MatrixXd h_c_reduced;  // H_c' = H_c - H_cp (H_p + damping I)^-1 H_cp^T
  std::map<std::pair<int, int>, int> covisibility;  // pose-id pair -> n_p
  int skipped_landmark_blocks = 0;  // singular 2x2 blocks at damping 0
};

SchurResult schur_reduce(const CameraPointHessian& h, double damping = 1e-9);

/// Essential-graph sparsification: keeps pairs with covisibility >= theta
/// plus all consecutive odometry edges. Edge information comes from the
/// negated off-diagonal Schur block, projected to the nearest PSD matrix.
core::PoseGraph extract_pose_graph(const SchurResult& schur,
                                   const std::vector<std::pair<int, core::Pose2>>& poses,
                                   const core::SensorModel& sensor, int theta_covis);

/// Clamp negative eigenvalues of the symmetrized input at zero.
Eigen::Matrix3d project_psd(const Eigen::Matrix3d& m);

}  // namespace topo::frontend
