#pragma once

#include <optional>
#include <vector>

#include "topoexplore/core.hpp"

namespace topo::planning {

struct PlannedPath {
  std::vector<std::pair<double, double>> waypoints;
  double cost = 0.0;  // accumulated traversal cost, meters at base cost

  double length() const;
};

/// Near-obstacle traversal cost at distance 0; decays linearly to the base
/// cost of 1 at the inflation radius.
constexpr double kLethalCost = 100.0;

struct CostGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.1;
  core::Pose2 origin;
  std::vector<double> cost;   // per-cell traversal cost, 1 = base
  std::vector<char> lethal;   // impassable (occupied, unknown, inflated core)

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cx < width && cy >= 0 && cy < height;
  }
  std::size_t idx(int cx, int cy) const { return static_cast<std::size_t>(cy) * width + cx; }
  std::pair<int, int> world_to_cell(double wx, double wy) const;
  std::pair<double, double> cell_to_world(int cx, int cy) const;
};

/// Occupied and unknown cells are lethal; free cells within the inflation
/// radius of an occupied cell get a cost decaying linearly from lethal to
/// base.
CostGrid inflate_costmap(const core::OccupancyGrid& grid, double inflation_radius);

/// 8-connected Dijkstra; returns nullopt when the goal is lethal or
/// disconnected. A goal cell that is free and borders unknown is treated
/// as non-lethal (frontier exemption).
std::optional<PlannedPath> plan_dijkstra(const CostGrid& costs, const core::OccupancyGrid& grid,
                                         std::pair<double, double> start,
                                         std::pair<double, double> goal);

/// Shortest-path tree from a start cell: per-cell accumulated cost plus the
/// predecessor index, so paths to many goals can share one sweep.
struct DijkstraTree {
  std::vector<double> dist;
  std::vector<int> prev;
};

DijkstraTree dijkstra_tree(const CostGrid& costs, std::pair<double, double> start);

/// Backtrack a path out of a precomputed tree; applies the same frontier
/// exemption as plan_dijkstra to the goal cell.
std::optional<PlannedPath> extract_path(const DijkstraTree& tree, const CostGrid& costs,
                                        const core::OccupancyGrid& grid,
                                        std::pair<double, double> goal);

/// Distance-to-every-cell sweep used for cheap reachability queries.
std::vector<double> dijkstra_field(const CostGrid& costs, std::pair<double, double> start);

/// One pose per arc-length interval of `spacing`, the last at the path end;
/// headings follow the local path tangent.
std::vector<core::Pose2> place_vertices(const PlannedPath& path, double spacing);

}  // namespace topo::planning
