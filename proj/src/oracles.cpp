#include "topoexplore/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "topoexplore/frontend.hpp"
#include "topoexplore/hallucination.hpp"
#include "topoexplore/optimality.hpp"

namespace topo::oracles {

using core::Pose2;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

double enumerate_tree_weight(const core::WeightedPoseGraph& g) {
  const int n = static_cast<int>(g.base.num_vertices());
  const int m = static_cast<int>(g.base.num_edges());
  if (n < 2) throw std::invalid_argument("need at least 2 vertices");
  if (m > 30) throw std::invalid_argument("too many edges to enumerate");
  double total = 0.0;
  // iterate over all (n-1)-subsets of the edge list
  std::vector<int> pick(n - 1);
  std::function<void(int, int, double)> rec = [&](int start, int depth, double prod) {
    if (depth == n - 1) {
      UnionFind uf(n);
      int merges = 0;
      for (int j = 0; j < n - 1; ++j) {
        const auto& e = g.base.edges()[pick[j]];
        if (uf.unite(g.base.index_of(e.i), g.base.index_of(e.k))) ++merges;
      }
      if (merges == n - 1) total += prod;
      return;
    }
    for (int j = start; j < m; ++j) {
      pick[depth] = j;
      rec(j + 1, depth + 1, prod * g.weights[j]);
    }
  };
  rec(0, 0, 1.0);
  return total;
}

core::WeightedPoseGraph random_connected_graph(int n, double edge_prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uw(0.1, 3.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto random_info = [&]() {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a(r, c) = gauss(rng);
    return core::InfoMatrix(a.transpose() * a + 0.2 * Eigen::Matrix3d::Identity());
  };

  core::WeightedPoseGraph g;
  g.base.add_first_vertex(0, Pose2(0, 0, 0));
  for (int v = 1; v < n; ++v) {
    core::GraphEdge e;
    e.i = v - 1;
    e.k = v;
    e.kind = core::EdgeKind::Odometry;
    e.rel = core::RelativePose2(1.0, 0.0, 0.0);
    e.info = random_info();
    g.base.add_vertex(v, Pose2(v, 0, 0), {e});
    g.weights.push_back(uw(rng));
  }
  for (int i = 0; i < n; ++i) {
    for (int k = i + 2; k < n; ++k) {
      if (u01(rng) >= edge_prob) continue;
      core::GraphEdge e;
      e.i = i;
      e.k = k;
      e.kind = core::EdgeKind::LoopClosure;
      e.rel = core::between(g.base.pose_of(i), g.base.pose_of(k));
      e.info = random_info();
      g.base.add_edge(e);
      g.weights.push_back(uw(rng));
    }
  }
  return g;
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = gauss(rng);
  return a.transpose() * a + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("bad input to spearman");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 1.0;  // constant ranks compare equal
  return num / std::sqrt(da * db);
}

Eigen::Matrix<double, 2, 3> fd_observation_jacobian(const Pose2& pose,
                                                    const Eigen::Vector2d& landmark,
                                                    double step) {
  auto residual = [&](double x, double y, double th) -> Eigen::Vector2d {
    const double dx = landmark.x() - x;
    const double dy = landmark.y() - y;
    return {std::hypot(dx, dy), core::normalize_angle(std::atan2(dy, dx) - th)};
  };
  Eigen::Matrix<double, 2, 3> j;
  for (int c = 0; c < 3; ++c) {
    const double dxp = c == 0 ? step : 0.0;
    const double dyp = c == 1 ? step : 0.0;
    const double dtp = c == 2 ? step : 0.0;
    const Eigen::Vector2d hi = residual(pose.x + dxp, pose.y + dyp, pose.theta + dtp);
    const Eigen::Vector2d lo = residual(pose.x - dxp, pose.y - dyp, pose.theta - dtp);
    j(0, c) = (hi[0] - lo[0]) / (2.0 * step);
    j(1, c) = core::normalize_angle(hi[1] - lo[1]) / (2.0 * step);
  }
  return j;
}

OracleReport run_trees_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> usize(2, 6);
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = usize(rng);
    const auto g = random_connected_graph(n, 0.4, rng);
    const double brute = enumerate_tree_weight(g);
    const double fast = optimality::log_tree_weight(g);
    const double rel = std::abs(fast - std::log(brute)) / std::max(1.0, std::abs(std::log(brute)));
    worst = std::max(worst, rel);
    if (rel > 1e-7) ++failures;
  }
  std::ostringstream detail;
  detail << "200 graphs, worst rel err " << worst;
  return {"trees", failures == 0, detail.str()};
}

OracleReport run_schur_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> upose(2, 6);
  std::uniform_int_distribution<int> upoint(4, 25);
  std::uniform_real_distribution<double> upos(-4.0, 4.0);
  std::uniform_real_distribution<double> uang(-3.0, 3.0);
  core::SensorModel sensor;
  sensor.fov = 2.0 * core::kPi;
  sensor.max_range = 50.0;
  sensor.range_noise_std = 0.05;
  sensor.bearing_noise_std = 0.02;

  int failures = 0;
  double worst_schur = 0.0, worst_det = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int np = upose(rng);
    const int nl = upoint(rng);
    std::vector<std::pair<int, Pose2>> poses;
    for (int i = 0; i < np; ++i) poses.emplace_back(i, Pose2(upos(rng), upos(rng), uang(rng)));
    std::map<int, Eigen::Vector2d> landmarks;
    std::vector<frontend::Observation> obs;
    for (int l = 0; l < nl; ++l) {
      landmarks.emplace(l, Eigen::Vector2d(upos(rng), upos(rng)));
      for (int i = 0; i < np; ++i) {
        const auto& lm = landmarks.at(l);
        const double r = std::hypot(lm.x() - poses[i].second.x, lm.y() - poses[i].second.y);
        if (r < 0.2) continue;
        obs.push_back({i, l, r,
                       core::normalize_angle(std::atan2(lm.y() - poses[i].second.y,
                                                        lm.x() - poses[i].second.x) -
                                             poses[i].second.theta)});
      }
    }
    const auto h = frontend::build_camera_point_hessian(poses, obs, landmarks, sensor);
    const auto schur = frontend::schur_reduce(h, 0.0);

    // dense oracle: invert h_p wholesale
    const Eigen::MatrixXd dense =
        h.h_c - h.h_cp * h.h_p.inverse() * h.h_cp.transpose();
    const double scale = std::max(1.0, dense.cwiseAbs().maxCoeff());
    const double err = (dense - schur.h_c_reduced).cwiseAbs().maxCoeff() / scale;
    worst_schur = std::max(worst_schur, err);
    if (err > 1e-9) ++failures;

    // determinant identity in log space: det(H_full) = det(H_p) det(H_c').
    // both sides get the same first-pose anchor block, removing the SE(2)
    // gauge null space that would otherwise make every determinant zero
    const Eigen::Index nc = h.h_c.rows();
    const Eigen::Index npts = h.h_p.rows();
    Eigen::MatrixXd h_c_anchored = h.h_c;
    h_c_anchored.topLeftCorner(3, 3) += Eigen::Matrix3d::Identity();
    Eigen::MatrixXd reduced_anchored = schur.h_c_reduced;
    reduced_anchored.topLeftCorner(3, 3) += Eigen::Matrix3d::Identity();
    Eigen::MatrixXd full(nc + npts, nc + npts);
    full << h_c_anchored, h.h_cp, h.h_cp.transpose(), h.h_p;
    auto log_det = [](const Eigen::MatrixXd& m) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
      double s = 0.0;
      for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::log(ldlt.vectorD()[i]);
      return s;
    };
    const double lhs = log_det(full);
    const double rhs = log_det(h.h_p) + log_det(reduced_anchored);
    const double det_err = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
    worst_det = std::max(worst_det, det_err);
    if (det_err > 1e-6) ++failures;
  }
  std::ostringstream detail;
  detail << "50 scenes, worst schur err " << worst_schur << ", worst logdet err " << worst_det;
  return {"schur", failures == 0, detail.str()};
}

OracleReport run_jacobian_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> upos(-5.0, 5.0);
  std::uniform_real_distribution<double> uang(-3.0, 3.0);
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Pose2 pose(upos(rng), upos(rng), uang(rng));
    Eigen::Vector2d lm(upos(rng), upos(rng));
    if (std::hypot(lm.x() - pose.x, lm.y() - pose.y) < 0.1) {
      lm.x() += 1.0;
    }
    const auto analytic = frontend::observation_jacobian(pose, lm);
    const auto fd = fd_observation_jacobian(pose, lm);
    const double err = (analytic - fd).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err > 1e-5) ++failures;
  }
  std::ostringstream detail;
  detail << "1000 configurations, worst abs err " << worst;
  return {"jacobian", failures == 0, detail.str()};
}

OracleReport run_ranking_oracle(std::uint64_t seed, bool print_per_scenario) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ucand(4, 8);
  std::uniform_int_distribution<int> ubranch(2, 7);
  std::uniform_int_distribution<int> ubase(0, 4);
  std::uniform_real_distribution<double> uscale(0.5, 4.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto random_info = [&]() {
    // near-isotropic information with a per-edge scale, as the frontend
    // produces for well-observed edges
    Eigen::Matrix3d p;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) p(r, c) = 0.15 * gauss(rng);
    const Eigen::Matrix3d sym = 0.5 * (p + p.transpose());
    return core::InfoMatrix(uscale(rng) * (Eigen::Matrix3d::Identity() + sym * 0.3));
  };

  std::vector<double> per_scenario_rho;
  int top1_agreements = 0;
  std::ostringstream detail;
  for (int scenario = 0; scenario < 30; ++scenario) {
    // shared base chain
    core::PoseGraph base;
    base.add_first_vertex(0, Pose2(0, 0, 0));
    std::vector<core::InfoMatrix> base_infos;
    for (int v = 1; v < 5; ++v) {
      core::GraphEdge e;
      e.i = v - 1;
      e.k = v;
      e.kind = core::EdgeKind::Odometry;
      e.rel = core::RelativePose2(1, 0, 0);
      e.info = random_info();
      base.add_vertex(v, Pose2(v, 0, 0), {e});
    }

    const int ncand = ucand(rng);
    std::vector<double> graph_scores, fim_scores;
    for (int c = 0; c < ncand; ++c) {
      core::WeightedPoseGraph g;
      g.base = base;
      const int blen = ubranch(rng);
      int prev = 4;
      for (int b = 0; b < blen; ++b) {
        const int bid = core::kHallucinatedIdOffset + b;
        core::GraphEdge e;
        e.i = prev;
        e.k = bid;
        e.kind = core::EdgeKind::Odometry;
        e.rel = core::RelativePose2(1, 0, 0);
        e.info = random_info();
        g.base.add_vertex(bid, Pose2(4 + b + 1, c, 0), {e});
        prev = bid;
      }
      if (u01(rng) < 0.6) {
        core::GraphEdge lc;
        lc.i = ubase(rng);
        lc.k = prev;
        lc.kind = core::EdgeKind::LoopClosure;
        lc.rel = core::between(g.base.pose_of(lc.i), g.base.pose_of(prev));
        lc.info = random_info();
        g.base.add_edge(lc);
      }
      for (const auto& e : g.base.edges())
        g.weights.push_back(optimality::dopt_matrix(e.info.m));
      graph_scores.push_back(optimality::dopt_graph(g));
      fim_scores.push_back(optimality::dopt_matrix(optimality::assemble_full_fim(g).m));
    }
    const double rho = spearman(graph_scores, fim_scores);
    per_scenario_rho.push_back(rho);
    const auto top_g = std::distance(graph_scores.begin(),
                                     std::max_element(graph_scores.begin(), graph_scores.end()));
    const auto top_f =
        std::distance(fim_scores.begin(), std::max_element(fim_scores.begin(), fim_scores.end()));
    if (top_g == top_f) ++top1_agreements;
    if (print_per_scenario)
      detail << "scenario " << scenario << ": spearman " << rho << "\n";
  }
  std::vector<double> sorted = per_scenario_rho;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[14] + sorted[15]);
  const double top1_frac = top1_agreements / 30.0;
  detail << "median spearman " << median << ", top-1 agreement " << top1_frac;
  return {"ranking", median >= 0.8 && top1_frac >= 0.7, detail.str()};
}

}  // namespace topo::oracles
