#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "topoexplore/core.hpp"

namespace topo::oracles {

/// Brute-force weighted spanning-tree count: sum over all spanning trees of
/// the product of their edge weights. Exponential; |V| <= ~8.
double enumerate_tree_weight(const core::WeightedPoseGraph& g);

/// Random connected weighted graph on n vertices with random PSD edge
/// information matrices; extra edges added with probability edge_prob.
core::WeightedPoseGraph random_connected_graph(int n, double edge_prob, std::mt19937_64& rng);

/// Random SPD matrix A^T A + eps I of the given size.
Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Central finite-difference Jacobian of the range-bearing observation.
Eigen::Matrix<double, 2, 3> fd_observation_jacobian(const core::Pose2& pose,
                                                    const Eigen::Vector2d& landmark,
                                                    double step = 1e-6);

struct OracleReport {
  std::string name;
  bool passed;
  std::string detail;
};

OracleReport run_trees_oracle(std::uint64_t seed);
OracleReport run_schur_oracle(std::uint64_t seed);
OracleReport run_jacobian_oracle(std::uint64_t seed);
OracleReport run_ranking_oracle(std::uint64_t seed, bool print_per_scenario = false);

}  // namespace topo::oracles
