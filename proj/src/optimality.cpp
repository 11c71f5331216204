#include "topoexplore/optimality.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <stdexcept>

namespace topo::optimality {

namespace {

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("matrix must be symmetric");
}

}  // namespace

double kiefer_criterion(const Eigen::MatrixXd& m, double p) {
  if (p == 0.0) throw std::invalid_argument("p = 0 is the D-opt limit; use dopt_matrix");
  require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-9 * lmax)
    throw std::invalid_argument("matrix has a negative eigenvalue beyond tolerance");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double lam = std::max(0.0, ev[i]);
    acc += std::pow(lam, p);
  }
  return std::pow(acc / static_cast<double>(ev.size()), 1.0 / p);
}

double dopt_matrix(const Eigen::MatrixXd& m) {
  require_symmetric(m);
  if (m.rows() == 3) {
    // closed-form path for the ubiquitous 3x3 case: the geometric mean of
    // the eigenvalues is det^(1/3); the solver only guards the floor
    const Eigen::Matrix3d m3 = m;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es3;
    es3.computeDirect(m3, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d& ev3 = es3.eigenvalues();
    const double lmax3 = ev3.cwiseAbs().maxCoeff();
    if (ev3.minCoeff() <= kEigenFloorRel * lmax3) return 0.0;
    return std::cbrt(m3.determinant());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double floor = kEigenFloorRel * lmax;
  double sum_log = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= floor) return 0.0;
    sum_log += std::log(ev[i]);
  }
  return std::exp(sum_log / static_cast<double>(ev.size()));
}

Laplacian weighted_laplacian(const core::WeightedPoseGraph& g) {
  g.validate();
  const auto n = static_cast<Eigen::Index>(g.base.num_vertices());
  Laplacian lap{Eigen::MatrixXd::Zero(n, n)};
  for (std::size_t j = 0; j < g.base.num_edges(); ++j) {
    const auto& e = g.base.edges()[j];
    const double w = g.weights[j];
    const int a = g.base.index_of(e.i);
    const int b = g.base.index_of(e.k);
    lap.m(a, a) += w;
    lap.m(b, b) += w;
    lap.m(a, b) -= w;  // parallel edges between the same pair accumulate
    lap.m(b, a) -= w;
  }
  return lap;
}

namespace {

double log_det_from_pivots(const Eigen::VectorXd& d, double pivot_floor) {
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] <= pivot_floor) return -std::numeric_limits<double>::infinity();
    log_det += std::log(d[i]);
  }
  return log_det;
}

// Graph Laplacians are sparse; past a small size the sparse factorization
// is decisively faster than the dense one.
constexpr Eigen::Index kSparseThreshold = 32;

double log_tree_weight_sparse(const core::WeightedPoseGraph& g, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * g.base.num_edges());
  for (std::size_t j = 0; j < g.base.num_edges(); ++j) {
    const auto& e = g.base.edges()[j];
    const double w = g.weights[j];
    const auto a = static_cast<Eigen::Index>(g.base.index_of(e.i));
    const auto b = static_cast<Eigen::Index>(g.base.index_of(e.k));
    if (a < n - 1) trips.emplace_back(a, a, w);
    if (b < n - 1) trips.emplace_back(b, b, w);
    if (a < n - 1 && b < n - 1) {
      trips.emplace_back(a, b, -w);
      trips.emplace_back(b, a, -w);
    }
  }
  Eigen::SparseMatrix<double> reduced(n - 1, n - 1);
  reduced.setFromTriplets(trips.begin(), trips.end());
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < n - 1; ++i) max_diag = std::max(max_diag, reduced.coeff(i, i));
  const double pivot_floor = kPivotFloorRel * std::max(max_diag, 1e-300);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(reduced);
  if (ldlt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  return log_det_from_pivots(ldlt.vectorD(), pivot_floor);
}

}  // namespace

double log_tree_weight(const core::WeightedPoseGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.base.num_vertices());
  if (n < 2) throw std::invalid_argument("log_tree_weight needs at least 2 vertices");
  if (n > kSparseThreshold) {
    g.validate();
    return log_tree_weight_sparse(g, n);
  }
  const Laplacian lap = weighted_laplacian(g);
  const Eigen::MatrixXd reduced = lap.m.topLeftCorner(n - 1, n - 1);
  const double max_diag = std::max(reduced.diagonal().maxCoeff(), 0.0);
  const double pivot_floor = kPivotFloorRel * std::max(max_diag, 1e-300);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(reduced);
  if (ldlt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  return log_det_from_pivots(ldlt.vectorD(), pivot_floor);
}

double dopt_graph(const core::WeightedPoseGraph& g) {
  const auto n = static_cast<double>(g.base.num_vertices());
  const double lt = log_tree_weight(g);
  if (!std::isfinite(lt)) return 0.0;
  return std::exp((std::log(n) + lt) / n);
}

BaseTreeEvaluator::BaseTreeEvaluator(const core::WeightedPoseGraph& base)
    : n_base_(base.base.num_vertices()), e_base_(base.base.num_edges()) {
  base.validate();
  if (n_base_ == 0) return;
  if (n_base_ == 1) {
    usable_ = true;  // empty reduced Laplacian: every query is pure update
    return;
  }
  // reduced Laplacian of the base with the first (anchor) vertex deleted
  const auto na = static_cast<Eigen::Index>(n_base_) - 1;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * e_base_);
  for (std::size_t j = 0; j < e_base_; ++j) {
    const auto& e = base.base.edges()[j];
    const double w = base.weights[j];
    const Eigen::Index a = base.base.index_of(e.i) - 1;
    const Eigen::Index b = base.base.index_of(e.k) - 1;
    if (a >= 0) trips.emplace_back(a, a, w);
    if (b >= 0) trips.emplace_back(b, b, w);
    if (a >= 0 && b >= 0) {
      trips.emplace_back(a, b, -w);
      trips.emplace_back(b, a, -w);
    }
  }
  Eigen::SparseMatrix<double> reduced(na, na);
  reduced.setFromTriplets(trips.begin(), trips.end());
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < na; ++i) max_diag = std::max(max_diag, reduced.coeff(i, i));
  ldlt_.compute(reduced);
  if (ldlt_.info() != Eigen::Success) return;
  const double pivot_floor = kPivotFloorRel * std::max(max_diag, 1e-300);
  log_det_base_ = log_det_from_pivots(ldlt_.vectorD(), pivot_floor);
  usable_ = std::isfinite(log_det_base_);
}

double BaseTreeEvaluator::log_tree_weight(const core::WeightedPoseGraph& g) const {
  if (!usable_) throw std::logic_error("evaluator base factorization unusable");
  const auto n = static_cast<Eigen::Index>(g.base.num_vertices());
  if (n < 2) throw std::invalid_argument("log_tree_weight needs at least 2 vertices");
  if (g.base.num_vertices() < n_base_ || g.base.num_edges() < e_base_)
    throw std::invalid_argument("query graph does not extend the base");
  g.validate();
  const auto nb = static_cast<Eigen::Index>(n_base_);
  const Eigen::Index b = n - nb;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // classify appended edges; vertex index 0 is the deleted anchor, base
  // vertices map to factor rows idx - 1, appended ones to block columns
  struct Up {
    Eigen::Index ia, ib;
    double w;
  };
  std::vector<Up> ups;
  std::vector<Eigen::Index> touched;
  std::unordered_map<Eigen::Index, int> tidx;
  auto touch = [&](Eigen::Index row) {
    auto it = tidx.find(row);
    if (it != tidx.end()) return it->second;
    const int c = static_cast<int>(touched.size());
    tidx.emplace(row, c);
    touched.push_back(row);
    return c;
  };
  for (std::size_t j = e_base_; j < g.base.num_edges(); ++j) {
    const auto& e = g.base.edges()[j];
    const double w = g.weights[j];
    if (w <= 0.0) continue;  // weight-0 edges leave the Laplacian untouched
    const auto ia = static_cast<Eigen::Index>(g.base.index_of(e.i));
    const auto ib = static_cast<Eigen::Index>(g.base.index_of(e.k));
    ups.push_back({ia, ib, w});
    if (ia > 0 && ia < nb) touch(ia - 1);
    if (ib > 0 && ib < nb) touch(ib - 1);
  }
  const auto t = static_cast<Eigen::Index>(touched.size());

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(t, t);     // update on touched base rows
  Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(t, b);    // base-to-appended coupling
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b, b);     // appended block
  auto slot = [&](Eigen::Index idx) -> std::pair<int, Eigen::Index> {
    if (idx == 0) return {0, 0};                       // anchor: deleted
    if (idx < nb) return {1, tidx.at(idx - 1)};        // base row, compact
    return {2, idx - nb};                              // appended column
  };
  for (const auto& up : ups) {
    const auto [ka, ra] = slot(up.ia);
    const auto [kb, rb] = slot(up.ib);
    if (ka == 1) u(ra, ra) += up.w;
    if (kb == 1) u(rb, rb) += up.w;
    if (ka == 2) c(ra, ra) += up.w;
    if (kb == 2) c(rb, rb) += up.w;
    if (ka == 1 && kb == 1) {
      u(ra, rb) -= up.w;
      u(rb, ra) -= up.w;
    } else if (ka == 2 && kb == 2) {
      c(ra, rb) -= up.w;
      c(rb, ra) -= up.w;
    } else if (ka == 1 && kb == 2) {
      bm(ra, rb) -= up.w;
    } else if (ka == 2 && kb == 1) {
      bm(rb, ra) -= up.w;
    }
  }

  double acc = log_det_base_;
  Eigen::MatrixXd s2 = c;
  if (t > 0) {
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nb - 1, t);
    for (Eigen::Index k = 0; k < t; ++k) rhs(touched[k], k) = 1.0;
    const Eigen::MatrixXd x = ldlt_.solve(rhs);
    Eigen::MatrixXd p(t, t);
    for (Eigen::Index k = 0; k < t; ++k) p.row(k) = x.row(touched[k]);
    // det(A + U) = det(A) det(I + P U); U is PSD, so the factor is >= 1
    const Eigen::MatrixXd iup = Eigen::MatrixXd::Identity(t, t) + u * p;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(iup);
    const double det_iup = lu.determinant();
    if (!(det_iup > 0.0) || !std::isfinite(det_iup)) return -kInf;
    acc += std::log(det_iup);
    if (b > 0) {
      // ((A + U)^{-1})_TT = P - P (I + U P)^{-1} U P  (Woodbury)
      const Eigen::MatrixXd q = p - p * lu.solve(u * p);
      s2.noalias() -= bm.transpose() * q * bm;
    }
  }
  if (b > 0) {
    const double max_diag = std::max(s2.diagonal().maxCoeff(), 0.0);
    const double pivot_floor = kPivotFloorRel * std::max(max_diag, 1e-300);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s2);
    if (ldlt.info() != Eigen::Success) return -kInf;
    const double tail = log_det_from_pivots(ldlt.vectorD(), pivot_floor);
    if (!std::isfinite(tail)) return -kInf;
    acc += tail;
  }
  return acc;
}

double BaseTreeEvaluator::dopt(const core::WeightedPoseGraph& g) const {
  const auto n = static_cast<double>(g.base.num_vertices());
  const double lt = log_tree_weight(g);
  if (!std::isfinite(lt)) return 0.0;
  return std::exp((std::log(n) + lt) / n);
}

FullFim assemble_full_fim(const core::WeightedPoseGraph& g) {
  constexpr int l = 3;
  const auto n = static_cast<Eigen::Index>(g.base.num_vertices());
  FullFim fim{Eigen::MatrixXd::Zero(n * l, n * l)};
  for (const auto& e : g.base.edges()) {
    const Eigen::Index a = g.base.index_of(e.i);
    const Eigen::Index b = g.base.index_of(e.k);
    const Eigen::Matrix3d& phi = e.info.m;
    fim.m.block<l, l>(a * l, a * l) += phi;
    fim.m.block<l, l>(b * l, b * l) += phi;
    fim.m.block<l, l>(a * l, b * l) -= phi;
    fim.m.block<l, l>(b * l, a * l) -= phi;
  }
  fim.m.topLeftCorner(l, l) += Eigen::Matrix3d::Identity();  // anchor vertex 0
  return fim;
}

}  // namespace topo::optimality
