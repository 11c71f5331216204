#include "topoexplore/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace topo::frontend {

using core::normalize_angle;
using core::Pose2;

std::vector<Observation> observe(const Pose2& true_pose, const core::World& world,
                                 const core::SensorModel& sensor, std::mt19937_64& rng) {
  sensor.validate();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Observation> out;
  for (const auto& lm : world.landmarks) {
    const double dx = lm.x - true_pose.x;
    const double dy = lm.y - true_pose.y;
    const double range = std::hypot(dx, dy);
    if (range <= 0.0 || range > sensor.max_range) continue;
    const double bearing = normalize_angle(std::atan2(dy, dx) - true_pose.theta);
    if (std::abs(bearing) > sensor.fov / 2.0) continue;
    const auto hit = core::nearest_wall_hit(world, true_pose.x, true_pose.y, lm.x, lm.y);
    if (hit && *hit < 1.0 - 1e-9) continue;  // occluded
    Observation obs;
    obs.pose_id = 0;
    obs.landmark_id = lm.id;
    obs.range = std::max(1e-6, range + gauss(rng) * sensor.range_noise_std);
    obs.bearing = normalize_angle(bearing + gauss(rng) * sensor.bearing_noise_std);
    out.push_back(obs);
  }
  return out;
}

std::vector<Observation> observe(const Pose2& true_pose, const core::World& world,
                                 const core::SensorModel& sensor, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return observe(true_pose, world, sensor, rng);
}

Eigen::Matrix<double, 2, 3> observation_jacobian(const Pose2& pose,
                                                 const Eigen::Vector2d& landmark) {
  const double dx = landmark.x() - pose.x;
  const double dy = landmark.y() - pose.y;
  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (r <= 1e-9) throw std::invalid_argument("landmark coincident with pose");
  Eigen::Matrix<double, 2, 3> j;
  j << -dx / r, -dy / r, 0.0,
       dy / r2, -dx / r2, -1.0;
  return j;
}

Eigen::Matrix2d landmark_jacobian(const Pose2& pose, const Eigen::Vector2d& landmark) {
  const double dx = landmark.x() - pose.x;
  const double dy = landmark.y() - pose.y;
  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (r <= 1e-9) throw std::invalid_argument("landmark coincident with pose");
  Eigen::Matrix2d j;
  j << dx / r, dy / r,
       -dy / r2, dx / r2;
  return j;
}

CameraPointHessian build_camera_point_hessian(
    const std::vector<std::pair<int, Pose2>>& poses, const std::vector<Observation>& observations,
    const std::map<int, Eigen::Vector2d>& landmark_estimates, const core::SensorModel& sensor) {
  CameraPointHessian h;
  for (const auto& [id, p] : poses) {
    const int idx = static_cast<int>(h.pose_index.size());
    h.pose_index.emplace(id, idx);
  }
  // only landmarks that are actually observed get a block
  std::set<int> observed;
  for (const auto& obs : observations) observed.insert(obs.landmark_id);
  for (int lid : observed) {
    if (!landmark_estimates.count(lid))
      throw std::invalid_argument("observation references unknown landmark");
    const int idx = static_cast<int>(h.point_index.size());
    h.point_index.emplace(lid, idx);
  }

  const auto np = static_cast<Eigen::Index>(h.pose_index.size());
  const auto nl = static_cast<Eigen::Index>(h.point_index.size());
  h.h_c = Eigen::MatrixXd::Zero(3 * np, 3 * np);
  h.h_p = Eigen::MatrixXd::Zero(2 * nl, 2 * nl);
  h.h_cp = Eigen::MatrixXd::Zero(3 * np, 2 * nl);
  h.observers.assign(nl, {});

  Eigen::Matrix2d info_obs = Eigen::Matrix2d::Zero();
  info_obs(0, 0) = 1.0 / (sensor.range_noise_std * sensor.range_noise_std + 1e-300);
  info_obs(1, 1) = 1.0 / (sensor.bearing_noise_std * sensor.bearing_noise_std + 1e-300);

  for (const auto& obs : observations) {
    auto pit = h.pose_index.find(obs.pose_id);
    if (pit == h.pose_index.end())
      throw std::invalid_argument("observation references unknown pose");
    const int pi = pit->second;
    const int li = h.point_index.at(obs.landmark_id);
    const Pose2& pose = poses[pi].second;
    const Eigen::Vector2d& lm = landmark_estimates.at(obs.landmark_id);
    const auto jc = observation_jacobian(pose, lm);
    const auto jp = landmark_jacobian(pose, lm);
    h.h_c.block<3, 3>(3 * pi, 3 * pi) += jc.transpose() * info_obs * jc;
    h.h_p.block<2, 2>(2 * li, 2 * li) += jp.transpose() * info_obs * jp;
    h.h_cp.block<3, 2>(3 * pi, 2 * li) += jc.transpose() * info_obs * jp;
    auto& who = h.observers[li];
    if (std::find(who.begin(), who.end(), obs.pose_id) == who.end())
      who.push_back(obs.pose_id);
  }
  for (auto& who : h.observers) std::sort(who.begin(), who.end());
  return h;
}

SchurResult schur_reduce(const CameraPointHessian& h, double damping) {
  if (damping < 0.0) throw std::invalid_argument("damping must be nonnegative");
  SchurResult r;
  r.h_c_reduced = h.h_c;
  const auto nl = static_cast<Eigen::Index>(h.point_index.size());
  for (Eigen::Index li = 0; li < nl; ++li) {
    Eigen::Matrix2d blk =
        h.h_p.block<2, 2>(2 * li, 2 * li) + damping * Eigen::Matrix2d::Identity();
    const double det = blk.determinant();
    if (std::abs(det) <= 1e-300) {
      ++r.skipped_landmark_blocks;
      continue;
    }
    const Eigen::MatrixXd coupling = h.h_cp.middleCols(2 * li, 2);
    r.h_c_reduced.noalias() -= coupling * blk.inverse() * coupling.transpose();
  }
  // covisibility counts from the observer lists
  for (const auto& who : h.observers) {
    for (std::size_t a = 0; a < who.size(); ++a)
      for (std::size_t b = a + 1; b < who.size(); ++b)
        r.covisibility[{who[a], who[b]}] += 1;
  }
  return r;
}

Eigen::Matrix3d project_psd(const Eigen::Matrix3d& m) {
  const Eigen::Matrix3d sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

core::PoseGraph extract_pose_graph(const SchurResult& schur,
                                   const std::vector<std::pair<int, Pose2>>& poses,
                                   const core::SensorModel& sensor, int theta_covis) {
  if (theta_covis < 1) throw std::invalid_argument("theta_covis must be >= 1");
  core::PoseGraph g;
  if (poses.empty()) return g;
  g.add_first_vertex(poses[0].first, poses[0].second);

  Eigen::Matrix3d odom_info = Eigen::Matrix3d::Zero();
  for (int c = 0; c < 3; ++c) {
    const double s = sensor.odom_noise_std[c];
    odom_info(c, c) = 1.0 / (s * s + 1e-300);
  }

  auto covis = [&](int a, int b) {
    auto it = schur.covisibility.find({std::min(a, b), std::max(a, b)});
    return it == schur.covisibility.end() ? 0 : it->second;
  };
  auto block_of = [&](std::size_t a, std::size_t b) {
    return Eigen::Matrix3d(schur.h_c_reduced.block<3, 3>(3 * a, 3 * b));
  };

  for (std::size_t v = 1; v < poses.size(); ++v) {
    const auto& [id, pose] = poses[v];
    std::vector<core::GraphEdge> edges;
    for (std::size_t u = 0; u < v; ++u) {
      const auto& [uid, upose] = poses[u];
      const bool consecutive = (u + 1 == v);
      const int np = covis(uid, id);
      if (!consecutive && np < theta_covis) continue;
      core::GraphEdge e;
      e.i = uid;
      e.k = id;
      e.kind = consecutive ? core::EdgeKind::Odometry : core::EdgeKind::LoopClosure;
      e.rel = core::between(upose, pose);
      Eigen::Matrix3d info = project_psd(-block_of(u, v));
      if (consecutive) info += odom_info;
      e.info = core::InfoMatrix(info);
      edges.push_back(e);
    }
    g.add_vertex(id, pose, edges);
  }
  return g;
}

}  // namespace topo::frontend
