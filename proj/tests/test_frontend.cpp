#include "doctest.h"

#include <random>

#include "topoexplore/frontend.hpp"
#include "topoexplore/oracles.hpp"

using namespace topo;
using core::Pose2;
using core::SensorModel;
using core::World;

namespace {

SensorModel noiseless() {
  SensorModel s;
  s.fov = core::kPi / 2.0;
  s.max_range = 5.0;
  s.range_noise_std = 0.0;
  s.bearing_noise_std = 0.0;
  return s;
}

}  // namespace

TEST_CASE("observe geometry, frustum and occlusion") {
  World w;
  w.bounds = {-10, -10, 10, 10};
  w.landmarks = {{1, 1.0, 0.0}};
  const auto s = noiseless();

  SUBCASE("landmark straight ahead") {
    const auto obs = frontend::observe(Pose2(0, 0, 0), w, s, 0);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].range == doctest::Approx(1.0));
    CHECK(obs[0].bearing == doctest::Approx(0.0));
  }
  SUBCASE("landmark behind the robot is outside the frustum") {
    CHECK(frontend::observe(Pose2(2, 0, 0), w, s, 0).empty());
  }
  SUBCASE("landmark behind a wall is occluded") {
    w.walls.push_back({0.5, -1, 0.5, 1});
    CHECK(frontend::observe(Pose2(0, 0, 0), w, s, 0).empty());
  }
  SUBCASE("identical seeds give identical streams") {
    SensorModel noisy = s;
    noisy.range_noise_std = 0.05;
    noisy.bearing_noise_std = 0.02;
    const auto a = frontend::observe(Pose2(0, 0, 0), w, noisy, 42);
    const auto b = frontend::observe(Pose2(0, 0, 0), w, noisy, 42);
    REQUIRE(a.size() == b.size());
    CHECK(a[0].range == b[0].range);
    CHECK(a[0].bearing == b[0].bearing);
  }
}

TEST_CASE("observation jacobian analytic rows") {
  const auto j = frontend::observation_jacobian(Pose2(0, 0, 0), {1.0, 0.0});
  CHECK(j(0, 0) == doctest::Approx(-1.0));
  CHECK(j(0, 1) == doctest::Approx(0.0));
  CHECK(j(0, 2) == doctest::Approx(0.0));
  CHECK(j(1, 0) == doctest::Approx(0.0));
  CHECK(j(1, 1) == doctest::Approx(-1.0));
  CHECK(j(1, 2) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(frontend::observation_jacobian(Pose2(0, 0, 0), {0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("range row norm is rotation invariant") {
  const auto j0 = frontend::observation_jacobian(Pose2(0, 0, 0), {2.0, 1.0});
  const double phi = 0.9;
  const auto j1 = frontend::observation_jacobian(
      Pose2(0, 0, phi), {2.0 * std::cos(phi) - 1.0 * std::sin(phi),
                         2.0 * std::sin(phi) + 1.0 * std::cos(phi)});
  CHECK(j0.row(0).norm() == doctest::Approx(j1.row(0).norm()).epsilon(1e-12));
}

TEST_CASE("finite-difference agreement on random configurations") {
  const auto report = oracles::run_jacobian_oracle(101);
  INFO(report.detail);
  CHECK(report.passed);
}

TEST_CASE("camera-point hessian structure") {
  SensorModel s = noiseless();
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.05;

  SUBCASE("single observation is a single-term sum") {
    std::vector<std::pair<int, Pose2>> poses = {{0, Pose2(0, 0, 0)}};
    std::map<int, Eigen::Vector2d> lms = {{7, {2.0, 1.0}}};
    std::vector<frontend::Observation> obs = {{0, 7, std::hypot(2.0, 1.0), std::atan2(1.0, 2.0)}};
    const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
    Eigen::Matrix2d info = Eigen::Vector2d(1.0 / 0.01, 1.0 / 0.0025).asDiagonal();
    const auto jc = frontend::observation_jacobian(poses[0].second, lms.at(7));
    const auto jp = frontend::landmark_jacobian(poses[0].second, lms.at(7));
    CHECK((h.h_c - jc.transpose() * info * jc).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((h.h_p - jp.transpose() * info * jp).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((h.h_cp - jc.transpose() * info * jp).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("disjoint landmark sets decouple h_c") {
    std::vector<std::pair<int, Pose2>> poses = {{0, Pose2(0, 0, 0)}, {1, Pose2(5, 5, 0)}};
    std::map<int, Eigen::Vector2d> lms = {{0, {1.0, 0.0}}, {1, {6.0, 5.0}}};
    std::vector<frontend::Observation> obs = {{0, 0, 1.0, 0.0}, {1, 1, 1.0, 0.0}};
    const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
    CHECK(h.h_c.block<3, 3>(0, 3).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("unknown references rejected") {
    std::vector<std::pair<int, Pose2>> poses = {{0, Pose2(0, 0, 0)}};
    std::map<int, Eigen::Vector2d> lms = {{0, {1.0, 0.0}}};
    std::vector<frontend::Observation> bad_pose = {{9, 0, 1.0, 0.0}};
    CHECK_THROWS_AS(frontend::build_camera_point_hessian(poses, bad_pose, lms, s),
                    std::invalid_argument);
    std::vector<frontend::Observation> bad_lm = {{0, 9, 1.0, 0.0}};
    CHECK_THROWS_AS(frontend::build_camera_point_hessian(poses, bad_lm, lms, s),
                    std::invalid_argument);
  }
}

TEST_CASE("full hessian is PSD on random scenes") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> upos(-3.0, 3.0);
  SensorModel s;
  s.max_range = 50.0;
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.05;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<int, Pose2>> poses;
    for (int i = 0; i < 3; ++i) poses.emplace_back(i, Pose2(upos(rng), upos(rng), upos(rng)));
    std::map<int, Eigen::Vector2d> lms;
    std::vector<frontend::Observation> obs;
    for (int l = 0; l < 8; ++l) {
      lms.emplace(l, Eigen::Vector2d(upos(rng), upos(rng)));
      for (int i = 0; i < 3; ++i) {
        const double r = std::hypot(lms.at(l).x() - poses[i].second.x,
                                    lms.at(l).y() - poses[i].second.y);
        if (r > 0.2) obs.push_back({i, l, r, 0.0});
      }
    }
    const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
    Eigen::MatrixXd full(h.h_c.rows() + h.h_p.rows(), h.h_c.rows() + h.h_p.rows());
    full << h.h_c, h.h_cp, h.h_cp.transpose(), h.h_p;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * lmax);

    // Schur reduction preserves PSD-ness (interlacing)
    const auto schur = frontend::schur_reduce(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(schur.h_c_reduced, Eigen::EigenvaluesOnly);
    CHECK(es2.eigenvalues().minCoeff() >= -1e-8 * lmax);
  }
}

TEST_CASE("schur reduction against dense oracle") {
  const auto report = oracles::run_schur_oracle(103);
  INFO(report.detail);
  CHECK(report.passed);
}

TEST_CASE("schur with zero coupling leaves h_c untouched") {
  SensorModel s = noiseless();
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.1;
  std::vector<std::pair<int, Pose2>> poses = {{0, Pose2(0, 0, 0)}};
  std::map<int, Eigen::Vector2d> lms = {{0, {1.0, 0.0}}};
  std::vector<frontend::Observation> obs = {{0, 0, 1.0, 0.0}};
  auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
  h.h_cp.setZero();
  const auto schur = frontend::schur_reduce(h);
  CHECK((schur.h_c_reduced - h.h_c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covisibility counts come out of the reduction") {
  SensorModel s = noiseless();
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.1;
  std::vector<std::pair<int, Pose2>> poses = {{0, Pose2(0, 0, 0)}, {1, Pose2(0.5, 0, 0)}};
  std::map<int, Eigen::Vector2d> lms = {{0, {2.0, 0.0}}, {1, {2.0, 1.0}}, {2, {-3.0, 0.0}}};
  std::vector<frontend::Observation> obs = {
      {0, 0, 2.0, 0.0}, {1, 0, 1.5, 0.0}, {0, 1, 2.2, 0.4}, {1, 1, 1.8, 0.5}, {0, 2, 3.0, core::kPi}};
  const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
  const auto schur = frontend::schur_reduce(h);
  CHECK(schur.covisibility.at({0, 1}) == 2);
}

TEST_CASE("essential-graph extraction") {
  SensorModel s = noiseless();
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.1;
  // three poses; poses 0 and 2 share only 2 landmarks
  std::vector<std::pair<int, Pose2>> poses = {
      {0, Pose2(0, 0, 0)}, {1, Pose2(1, 0, 0)}, {2, Pose2(2, 0, 0)}};
  std::map<int, Eigen::Vector2d> lms;
  std::vector<frontend::Observation> obs;
  for (int l = 0; l < 2; ++l) {
    lms.emplace(l, Eigen::Vector2d(1.0 + 0.3 * l, 2.0));
    for (int i = 0; i < 3; ++i) obs.push_back({i, l, 2.0, 0.5});
  }
  const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
  const auto schur = frontend::schur_reduce(h);

  SUBCASE("below threshold, non-consecutive pairs get no edge") {
    const auto g = frontend::extract_pose_graph(schur, poses, s, 3);
    CHECK(g.num_edges() == 2);  // only the odometry chain
    CHECK(g.is_connected());
  }
  SUBCASE("threshold 1 gives the complete covisibility topology") {
    const auto g = frontend::extract_pose_graph(schur, poses, s, 1);
    CHECK(g.num_edges() == 3);
    for (const auto& e : g.edges()) {
      CHECK(e.info.is_symmetric());
      CHECK(e.info.is_psd());
    }
  }
}

TEST_CASE("sparsity of the reduced hessian matches the extracted topology") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> upos(-2.0, 2.0);
  SensorModel s;
  s.max_range = 50.0;
  s.range_noise_std = 0.1;
  s.bearing_noise_std = 0.05;
  std::vector<std::pair<int, Pose2>> poses;
  for (int i = 0; i < 4; ++i) poses.emplace_back(i, Pose2(3.0 * i, 0, 0));
  std::map<int, Eigen::Vector2d> lms;
  std::vector<frontend::Observation> obs;
  // landmarks near each consecutive midpoint: consecutive pairs covisible
  for (int l = 0; l < 9; ++l) {
    const int seg = l / 3;
    lms.emplace(l, Eigen::Vector2d(3.0 * seg + 1.5 + 0.1 * (l % 3), 1.0));
    for (int i = seg; i <= seg + 1; ++i) {
      const double r = std::hypot(lms.at(l).x() - poses[i].second.x, 1.0);
      obs.push_back({i, l, r, 0.3});
    }
  }
  const auto h = frontend::build_camera_point_hessian(poses, obs, lms, s);
  const auto schur = frontend::schur_reduce(h);
  const auto g = frontend::extract_pose_graph(schur, poses, s, 3);
  // each off-diagonal block above threshold corresponds to an edge
  for (int i = 0; i < 4; ++i)
    for (int k = i + 1; k < 4; ++k) {
      const double blk = schur.h_c_reduced.block<3, 3>(3 * i, 3 * k).cwiseAbs().maxCoeff();
      bool has_edge = false;
      for (const auto& e : g.edges())
        if ((e.i == i && e.k == k) || (e.i == k && e.k == i)) has_edge = true;
      if (blk > 1e-9) CHECK(has_edge);
    }
}
