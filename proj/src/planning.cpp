#include "topoexplore/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace topo::planning {

using core::Cell;
using core::OccupancyGrid;

double PlannedPath::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    len += std::hypot(waypoints[i].first - waypoints[i - 1].first,
                      waypoints[i].second - waypoints[i - 1].second);
  return len;
}

std::pair<int, int> CostGrid::world_to_cell(double wx, double wy) const {
  return {static_cast<int>(std::floor((wx - origin.x) / resolution)),
          static_cast<int>(std::floor((wy - origin.y) / resolution))};
}

std::pair<double, double> CostGrid::cell_to_world(int cx, int cy) const {
  return {origin.x + (cx + 0.5) * resolution, origin.y + (cy + 0.5) * resolution};
}

CostGrid inflate_costmap(const OccupancyGrid& grid, double inflation_radius) {
  if (inflation_radius < 0.0) throw std::invalid_argument("inflation radius must be >= 0");
  CostGrid cg;
  cg.width = grid.width();
  cg.height = grid.height();
  cg.resolution = grid.resolution();
  cg.origin = grid.origin();
  cg.cost.assign(static_cast<std::size_t>(cg.width) * cg.height, 1.0);
  cg.lethal.assign(cg.cost.size(), 0);

  std::vector<std::pair<int, int>> occupied;
  for (int y = 0; y < cg.height; ++y)
    for (int x = 0; x < cg.width; ++x) {
      const Cell c = grid.at(x, y);
      if (c == Cell::Occupied || c == Cell::Unknown) cg.lethal[cg.idx(x, y)] = 1;
      if (c == Cell::Occupied) occupied.emplace_back(x, y);
    }

  const int r_cells = static_cast<int>(std::ceil(inflation_radius / cg.resolution));
  for (const auto& [ox, oy] : occupied) {
    for (int dy = -r_cells; dy <= r_cells; ++dy)
      for (int dx = -r_cells; dx <= r_cells; ++dx) {
        const int x = ox + dx;
        const int y = oy + dy;
        if (!cg.in_bounds(x, y) || cg.lethal[cg.idx(x, y)]) continue;
        const double d = std::hypot(dx, dy) * cg.resolution;
        if (d > inflation_radius) continue;
        const double c = kLethalCost + (1.0 - kLethalCost) * (d / inflation_radius);
        cg.cost[cg.idx(x, y)] = std::max(cg.cost[cg.idx(x, y)], c);
      }
  }
  return cg;
}

namespace {

struct QItem {
  double dist;
  int cell;
  bool operator>(const QItem& o) const { return dist > o.dist; }
};

bool frontier_exempt(const OccupancyGrid& grid, int cx, int cy) {
  if (!grid.in_bounds(cx, cy) || grid.at(cx, cy) != Cell::Free) return false;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int nx = cx + dx;
      const int ny = cy + dy;
      if (grid.in_bounds(nx, ny) && grid.at(nx, ny) == Cell::Unknown) return true;
    }
  return false;
}

}  // namespace

DijkstraTree dijkstra_tree(const CostGrid& costs, std::pair<double, double> start) {
  const auto [sx, sy] = costs.world_to_cell(start.first, start.second);
  if (!costs.in_bounds(sx, sy) || costs.lethal[costs.idx(sx, sy)])
    throw std::invalid_argument("start in lethal cell");
  DijkstraTree tree;
  tree.dist.assign(costs.cost.size(), std::numeric_limits<double>::infinity());
  tree.prev.assign(costs.cost.size(), -1);
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> q;
  tree.dist[costs.idx(sx, sy)] = 0.0;
  q.push({0.0, static_cast<int>(costs.idx(sx, sy))});
  const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!q.empty()) {
    const auto [d, c] = q.top();
    q.pop();
    if (d > tree.dist[c]) continue;
    const int cx = c % costs.width;
    const int cy = c / costs.width;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k];
      const int ny = cy + dy8[k];
      if (!costs.in_bounds(nx, ny)) continue;
      const std::size_t ni = costs.idx(nx, ny);
      if (costs.lethal[ni]) continue;
      const double step = (k < 4 ? 1.0 : std::sqrt(2.0)) * costs.resolution;
      const double nd = d + step * costs.cost[ni];
      if (nd < tree.dist[ni]) {
        tree.dist[ni] = nd;
        tree.prev[ni] = c;
        q.push({nd, static_cast<int>(ni)});
      }
    }
  }
  return tree;
}

std::optional<PlannedPath> extract_path(const DijkstraTree& tree, const CostGrid& costs,
                                        const OccupancyGrid& grid,
                                        std::pair<double, double> goal) {
  const auto [gx, gy] = costs.world_to_cell(goal.first, goal.second);
  if (!costs.in_bounds(gx, gy)) return std::nullopt;
  const std::size_t gidx = costs.idx(gx, gy);

  double goal_cost = tree.dist[gidx];
  int goal_prev = tree.prev[gidx];
  if (costs.lethal[gidx]) {
    // lethal goals are only admissible under the frontier exemption, entered
    // at base cost from their cheapest non-lethal neighbor
    if (!frontier_exempt(grid, gx, gy)) return std::nullopt;
    goal_cost = std::numeric_limits<double>::infinity();
    goal_prev = -1;
    const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    for (int k = 0; k < 8; ++k) {
      const int nx = gx + dx8[k];
      const int ny = gy + dy8[k];
      if (!costs.in_bounds(nx, ny)) continue;
      const std::size_t ni = costs.idx(nx, ny);
      if (costs.lethal[ni] || !std::isfinite(tree.dist[ni])) continue;
      const double step = (k < 4 ? 1.0 : std::sqrt(2.0)) * costs.resolution;
      const double nd = tree.dist[ni] + step * 1.0;
      if (nd < goal_cost) {
        goal_cost = nd;
        goal_prev = static_cast<int>(ni);
      }
    }
  }
  if (!std::isfinite(goal_cost)) return std::nullopt;

  PlannedPath path;
  path.cost = goal_cost;
  std::vector<int> cells;
  cells.push_back(static_cast<int>(gidx));
  for (int c = goal_prev; c != -1; c = tree.prev[c]) cells.push_back(c);
  std::reverse(cells.begin(), cells.end());
  for (int c : cells)
    path.waypoints.push_back(costs.cell_to_world(c % costs.width, c / costs.width));
  return path;
}

std::vector<double> dijkstra_field(const CostGrid& costs, std::pair<double, double> start) {
  return dijkstra_tree(costs, start).dist;
}

std::optional<PlannedPath> plan_dijkstra(const CostGrid& costs, const OccupancyGrid& grid,
                                         std::pair<double, double> start,
                                         std::pair<double, double> goal) {
  const auto [sx, sy] = costs.world_to_cell(start.first, start.second);
  if (!costs.in_bounds(sx, sy) || costs.lethal[costs.idx(sx, sy)])
    throw std::invalid_argument("start in lethal cell");
  const auto [gx, gy] = costs.world_to_cell(goal.first, goal.second);
  if (!costs.in_bounds(gx, gy)) return std::nullopt;
  const std::size_t gidx = costs.idx(gx, gy);
  const bool goal_exempt = costs.lethal[gidx] && frontier_exempt(grid, gx, gy);
  if (costs.lethal[gidx] && !goal_exempt) return std::nullopt;

  std::vector<double> dist(costs.cost.size(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(costs.cost.size(), -1);
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> q;
  dist[costs.idx(sx, sy)] = 0.0;
  q.push({0.0, static_cast<int>(costs.idx(sx, sy))});
  const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!q.empty()) {
    const auto [d, c] = q.top();
    q.pop();
    if (d > dist[c]) continue;
    if (static_cast<std::size_t>(c) == gidx) break;
    const int cx = c % costs.width;
    const int cy = c / costs.width;
    for (int k = 0; k < 8; ++k) {
      const int nx = cx + dx8[k];
      const int ny = cy + dy8[k];
      if (!costs.in_bounds(nx, ny)) continue;
      const std::size_t ni = costs.idx(nx, ny);
      if (costs.lethal[ni] && !(ni == gidx && goal_exempt)) continue;
      const double cell_cost = costs.lethal[ni] ? 1.0 : costs.cost[ni];
      const double step = (k < 4 ? 1.0 : std::sqrt(2.0)) * costs.resolution;
      const double nd = d + step * cell_cost;
      if (nd < dist[ni]) {
        dist[ni] = nd;
        prev[ni] = c;
        q.push({nd, static_cast<int>(ni)});
      }
    }
  }
  if (!std::isfinite(dist[gidx])) return std::nullopt;

  PlannedPath path;
  path.cost = dist[gidx];
  std::vector<int> cells;
  for (int c = static_cast<int>(gidx); c != -1; c = prev[c]) cells.push_back(c);
  std::reverse(cells.begin(), cells.end());
  for (int c : cells)
    path.waypoints.push_back(costs.cell_to_world(c % costs.width, c / costs.width));
  return path;
}

std::vector<core::Pose2> place_vertices(const PlannedPath& path, double spacing) {
  if (spacing <= 0.0) throw std::invalid_argument("spacing must be positive");
  if (path.waypoints.empty()) return {};
  const double total = path.length();
  const int count = std::max(1, static_cast<int>(std::ceil(total / spacing)));

  // heading of the final segment as fallback for degenerate paths
  double last_heading = 0.0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    const double dx = path.waypoints[i].first - path.waypoints[i - 1].first;
    const double dy = path.waypoints[i].second - path.waypoints[i - 1].second;
    if (std::hypot(dx, dy) > 1e-12) last_heading = std::atan2(dy, dx);
  }

  std::vector<core::Pose2> out;
  for (int n = 1; n <= count; ++n) {
    const double target = std::min(n * spacing, total);
    double acc = 0.0;
    core::Pose2 pose(path.waypoints.back().first, path.waypoints.back().second, last_heading);
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
      const double dx = path.waypoints[i].first - path.waypoints[i - 1].first;
      const double dy = path.waypoints[i].second - path.waypoints[i - 1].second;
      const double seg = std::hypot(dx, dy);
      if (seg < 1e-12) continue;
      if (acc + seg >= target - 1e-12) {
        const double t = std::clamp((target - acc) / seg, 0.0, 1.0);
        pose = core::Pose2(path.waypoints[i - 1].first + t * dx,
                           path.waypoints[i - 1].second + t * dy, std::atan2(dy, dx));
        break;
      }
      acc += seg;
    }
    out.push_back(pose);
  }
  return out;
}

}  // namespace topo::planning
