#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "topoexplore/core.hpp"

namespace topo::optimality {

/// Matrices with a smallest eigenvalue at or below eigen_floor * lambda_max
/// are treated as singular: their D-opt is 0.
constexpr double kEigenFloorRel = 1e-12;
/// Reduced-Laplacian pivots at or below pivot_floor * max(diag) signal a
/// disconnected graph.
constexpr double kPivotFloorRel = 1e-12;

struct Laplacian {
  Eigen::MatrixXd m;
};

struct FullFim {
  Eigen::MatrixXd m;
};

/// Kiefer's criterion family: ((1/l) trace(M^p))^(1/p). p = 0 is rejected;
/// use dopt_matrix for the D-opt limit.
double kiefer_criterion(const Eigen::MatrixXd& m, double p);

/// Geometric mean of eigenvalues, exp((1/l) sum log lambda_k). Returns 0
/// when any eigenvalue falls at or below the eigen floor.
double dopt_matrix(const Eigen::MatrixXd& m);

Laplacian weighted_laplacian(const core::WeightedPoseGraph& g);

/// log t(G_gamma) via the reduced-Laplacian determinant (Matrix-Tree).
/// Returns -infinity for disconnected graphs.
double log_tree_weight(const core::WeightedPoseGraph& g);

/// (|V| t(G_gamma))^(1/|V|); 0 for disconnected graphs.
double dopt_graph(const core::WeightedPoseGraph& g);

/// Full pose-graph information matrix Y = sum_j A_j^T Phi_j A_j with the
/// first vertex block anchored by +I. Test oracle; not on the decision path.
FullFim assemble_full_fim(const core::WeightedPoseGraph& g);

/// Tree-weight queries against a family of graphs sharing a fixed base:
/// the base's reduced Laplacian is factored once, and each query graph --
/// the base plus appended vertices and edges -- is answered through a
/// low-rank determinant update. Matches log_tree_weight / dopt_graph up to
/// roundoff.
class BaseTreeEvaluator {
 public:
  /// The base graph must be connected; usable() reports whether the
  /// factorization succeeded (callers fall back to log_tree_weight).
  explicit BaseTreeEvaluator(const core::WeightedPoseGraph& base);

  bool usable() const { return usable_; }

  /// g's vertices and edges must start with the base's, in order.
  double log_tree_weight(const core::WeightedPoseGraph& g) const;
  double dopt(const core::WeightedPoseGraph& g) const;

 private:
  std::size_t n_base_ = 0;
  std::size_t e_base_ = 0;
  double log_det_base_ = 0.0;
  bool usable_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace topo::optimality
