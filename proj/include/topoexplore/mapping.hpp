#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "topoexplore/core.hpp"

namespace topo::mapping {

enum class Detector : uint8_t { Edge, Rrt };

struct FrontierCandidate {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  int cluster_size = 1;
  Detector detector = Detector::Edge;
  int created_at = 0;  // decision-epoch counter
};

/// Raycast integration of a simulated scan into the grid. Cells before the
/// first wall hit become free, the hit cell occupied; occupied is sticky.
void integrate_scan(core::OccupancyGrid& grid, const core::Pose2& pose,
                    const core::World& world, const core::SensorModel& sensor);

struct CellIndex {
  int cx;
  int cy;
};

/// Free cells 8-adjacent to unknown, after a 3x3 morphological opening of
/// the free mask removes single-cell speckle.
std::vector<CellIndex> detect_frontiers_edge(const core::OccupancyGrid& grid);

struct Point2 {
  double x;
  double y;
};

/// Incremental RRT frontier detector; the tree persists across grow() calls.
class RrtFrontierDetector {
 public:
  RrtFrontierDetector(Point2 root, double step, std::uint64_t seed);

  /// Runs `iterations` extensions over the given grid snapshot; returns the
  /// boundary points where extensions left free space into unknown.
  std::vector<Point2> grow(const core::OccupancyGrid& grid, int iterations);

  std::size_t tree_size() const { return nodes_.size(); }

 private:
  std::vector<Point2> nodes_;
  double step_;
  std::mt19937_64 rng_;
  bool root_checked_ = false;
};

struct Cluster {
  Point2 centroid;
  int count;
};

/// Flat-kernel mean shift; modes closer than bandwidth/2 merge.
std::vector<Cluster> cluster_mean_shift(const std::vector<Point2>& points, double bandwidth);

/// Drops candidates that are stale, low-informative, unreachable, or
/// duplicates of a surviving candidate.
std::vector<FrontierCandidate> filter_frontiers(
    const std::vector<FrontierCandidate>& candidates, const core::OccupancyGrid& grid,
    const std::function<bool(double, double)>& reachable, int min_info_radius_cells,
    int max_age, int current_epoch);

/// Unknown-cell fraction in the disc of `radius` around (x, y); cells
/// outside the grid count as unknown.
double unknown_fraction(const core::OccupancyGrid& grid, double x, double y, double radius);

/// Row prefix sums over a frozen grid so repeated unknown_fraction queries
/// run in O(radius) instead of O(radius^2). fraction() visits exactly the
/// cells unknown_fraction visits and returns the identical value.
class UnknownDiscSampler {
 public:
  UnknownDiscSampler() = default;
  explicit UnknownDiscSampler(const core::OccupancyGrid& grid);

  double fraction(double x, double y, double radius) const;
  bool ready() const { return width_ > 0; }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.0;
  core::Pose2 origin_;
  std::vector<int> row_prefix_;  // height_ rows of width_ + 1 running counts
};

}  // namespace topo::mapping
