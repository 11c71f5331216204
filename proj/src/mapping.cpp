#include "topoexplore/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace topo::mapping {

using core::Cell;
using core::OccupancyGrid;
using core::Pose2;

void integrate_scan(OccupancyGrid& grid, const Pose2& pose, const core::World& world,
                    const core::SensorModel& sensor) {
  const auto [pcx, pcy] = grid.world_to_cell(pose.x, pose.y);
  if (!grid.in_bounds(pcx, pcy)) throw std::invalid_argument("pose outside grid");

  const double res = grid.resolution();
  const double dalpha = std::atan2(res, sensor.max_range);
  const double half_fov = sensor.fov / 2.0;
  const double march = res * 0.5;

  auto mark_free = [&](int cx, int cy) {
    if (grid.in_bounds(cx, cy) && grid.at(cx, cy) != Cell::Occupied)
      grid.set(cx, cy, Cell::Free);
  };

  for (double a = -half_fov; a <= half_fov + 1e-12; a += dalpha) {
    const double ang = pose.theta + a;
    const double dirx = std::cos(ang);
    const double diry = std::sin(ang);
    const double ex = pose.x + sensor.max_range * dirx;
    const double ey = pose.y + sensor.max_range * diry;
    const auto hit = core::nearest_wall_hit(world, pose.x, pose.y, ex, ey);
    const double free_len = hit ? *hit * sensor.max_range : sensor.max_range;
    for (double s = 0.0; s < free_len; s += march) {
      const auto [cx, cy] = grid.world_to_cell(pose.x + s * dirx, pose.y + s * diry);
      mark_free(cx, cy);
    }
    if (hit) {
      // nudge slightly past the wall so the hit lands in the far-side cell
      const double hs = free_len + 1e-6;
      const auto [cx, cy] = grid.world_to_cell(pose.x + hs * dirx, pose.y + hs * diry);
      if (grid.in_bounds(cx, cy)) grid.set(cx, cy, Cell::Occupied);
    }
  }
}

namespace {

// a diagonal step whose two orthogonal mediator cells are both occupied
// passes through a sealed wall corner; the unknown cell on the far side is
// neither observable nor reachable, so it must not count as adjacency
bool corner_blocked(const OccupancyGrid& grid, int fx, int fy, int ux, int uy) {
  if (fx == ux || fy == uy) return false;
  const bool a = grid.in_bounds(ux, fy) && grid.at(ux, fy) == Cell::Occupied;
  const bool b = grid.in_bounds(fx, uy) && grid.at(fx, uy) == Cell::Occupied;
  return a && b;
}

std::vector<char> opened_free_mask(const OccupancyGrid& grid) {
  const int w = grid.width();
  const int h = grid.height();
  auto at = [&](const std::vector<char>& m, int x, int y) -> char {
    return (x >= 0 && x < w && y >= 0 && y < h) ? m[static_cast<std::size_t>(y) * w + x] : 0;
  };
  std::vector<char> free_mask(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      free_mask[static_cast<std::size_t>(y) * w + x] = grid.at(x, y) == Cell::Free ? 1 : 0;

  std::vector<char> eroded(free_mask.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      char all = 1;
      for (int dy = -1; dy <= 1 && all; ++dy)
        for (int dx = -1; dx <= 1 && all; ++dx)
          if (!at(free_mask, x + dx, y + dy)) all = 0;
      eroded[static_cast<std::size_t>(y) * w + x] = all;
    }
  std::vector<char> opened(free_mask.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      char any = 0;
      for (int dy = -1; dy <= 1 && !any; ++dy)
        for (int dx = -1; dx <= 1 && !any; ++dx)
          if (at(eroded, x + dx, y + dy)) any = 1;
      opened[static_cast<std::size_t>(y) * w + x] = any;
    }
  return opened;
}

}  // namespace

std::vector<CellIndex> detect_frontiers_edge(const OccupancyGrid& grid) {
  const int w = grid.width();
  const int h = grid.height();
  const std::vector<char> opened = opened_free_mask(grid);
  std::vector<CellIndex> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!opened[static_cast<std::size_t>(y) * w + x]) continue;
      if (grid.at(x, y) != Cell::Free) continue;  // opening is a subset, but be explicit
      bool near_unknown = false;
      for (int dy = -1; dy <= 1 && !near_unknown; ++dy)
        for (int dx = -1; dx <= 1 && !near_unknown; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (grid.in_bounds(nx, ny) && grid.at(nx, ny) == Cell::Unknown &&
              !corner_blocked(grid, x, y, nx, ny))
            near_unknown = true;
        }
      if (near_unknown) out.push_back({x, y});
    }
  }
  return out;
}

RrtFrontierDetector::RrtFrontierDetector(Point2 root, double step, std::uint64_t seed)
    : step_(step), rng_(seed) {
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  nodes_.push_back(root);
}

std::vector<Point2> RrtFrontierDetector::grow(const OccupancyGrid& grid, int iterations) {
  const auto [rcx, rcy] = grid.world_to_cell(nodes_[0].x, nodes_[0].y);
  if (!root_checked_) {
    if (!grid.in_bounds(rcx, rcy) || grid.at(rcx, rcy) != Cell::Free)
      throw std::invalid_argument("RRT root not in a free cell");
    root_checked_ = true;
  }
  const double xmin = grid.origin().x;
  const double ymin = grid.origin().y;
  const double xmax = xmin + grid.width() * grid.resolution();
  const double ymax = ymin + grid.height() * grid.resolution();
  std::uniform_real_distribution<double> ux(xmin, xmax);
  std::uniform_real_distribution<double> uy(ymin, ymax);
  const double march = grid.resolution() * 0.5;

  std::vector<Point2> emitted;
  for (int it = 0; it < iterations; ++it) {
    const double sx = ux(rng_);
    const double sy = uy(rng_);
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double d = std::hypot(nodes_[i].x - sx, nodes_[i].y - sy);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (best < 1e-9) continue;
    const double len = std::min(step_, best);
    const double dirx = (sx - nodes_[nearest].x) / best;
    const double diry = (sy - nodes_[nearest].y) / best;

    Point2 last_free = nodes_[nearest];
    auto [lcx, lcy] = grid.world_to_cell(last_free.x, last_free.y);
    bool blocked = false;
    bool hit_unknown = false;
    for (double s = march; s <= len + 1e-12; s += march) {
      const Point2 p{nodes_[nearest].x + s * dirx, nodes_[nearest].y + s * diry};
      const auto [cx, cy] = grid.world_to_cell(p.x, p.y);
      if (!grid.in_bounds(cx, cy) || grid.at(cx, cy) == Cell::Occupied) {
        blocked = true;
        break;
      }
      if (grid.at(cx, cy) == Cell::Unknown) {
        // unknown reached only by cutting a sealed wall corner is a collision
        if (corner_blocked(grid, lcx, lcy, cx, cy))
          blocked = true;
        else
          hit_unknown = true;
        break;
      }
      last_free = p;
      lcx = cx;
      lcy = cy;
    }
    if (hit_unknown) {
      emitted.push_back(last_free);
    } else if (!blocked) {
      nodes_.push_back({nodes_[nearest].x + len * dirx, nodes_[nearest].y + len * diry});
    }
  }
  return emitted;
}

std::vector<Cluster> cluster_mean_shift(const std::vector<Point2>& points, double bandwidth) {
  if (bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  if (points.empty()) return {};

  std::vector<Point2> shifted = points;
  for (auto& p : shifted) {
    for (int iter = 0; iter < 100; ++iter) {
      double mx = 0.0, my = 0.0;
      int n = 0;
      for (const auto& q : points) {
        if (std::hypot(q.x - p.x, q.y - p.y) <= bandwidth) {
          mx += q.x;
          my += q.y;
          ++n;
        }
      }
      mx /= n;
      my /= n;
      const double move = std::hypot(mx - p.x, my - p.y);
      p = {mx, my};
      if (move < 1e-4) break;
    }
  }

  std::vector<Cluster> modes;
  std::vector<std::pair<double, double>> sums;  // converged-position sums per mode
  for (const auto& p : shifted) {
    bool merged = false;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (std::hypot(modes[m].centroid.x - p.x, modes[m].centroid.y - p.y) < bandwidth / 2.0) {
        sums[m].first += p.x;
        sums[m].second += p.y;
        ++modes[m].count;
        modes[m].centroid = {sums[m].first / modes[m].count, sums[m].second / modes[m].count};
        merged = true;
        break;
      }
    }
    if (!merged) {
      modes.push_back({p, 1});
      sums.emplace_back(p.x, p.y);
    }
  }
  return modes;
}

double unknown_fraction(const core::OccupancyGrid& grid, double x, double y, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  const auto [ccx, ccy] = grid.world_to_cell(x, y);
  const int r_cells = static_cast<int>(std::ceil(radius / grid.resolution()));
  int total = 0;
  int unknown = 0;
  for (int dy = -r_cells; dy <= r_cells; ++dy) {
    for (int dx = -r_cells; dx <= r_cells; ++dx) {
      const int cx = ccx + dx;
      const int cy = ccy + dy;
      const auto [wx, wy] = grid.cell_to_world(cx, cy);
      if (std::hypot(wx - x, wy - y) > radius) continue;
      ++total;
      if (!grid.in_bounds(cx, cy) || grid.at(cx, cy) == Cell::Unknown) ++unknown;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(unknown) / total;
}

UnknownDiscSampler::UnknownDiscSampler(const core::OccupancyGrid& grid)
    : width_(grid.width()),
      height_(grid.height()),
      resolution_(grid.resolution()),
      origin_(grid.origin()) {
  row_prefix_.assign(static_cast<std::size_t>(height_) * (width_ + 1), 0);
  for (int y = 0; y < height_; ++y) {
    int* row = row_prefix_.data() + static_cast<std::size_t>(y) * (width_ + 1);
    for (int x = 0; x < width_; ++x)
      row[x + 1] = row[x] + (grid.at(x, y) == core::Cell::Unknown ? 1 : 0);
  }
}

double UnknownDiscSampler::fraction(double x, double y, double radius) const {
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  if (width_ == 0) throw std::logic_error("sampler not initialized");
  const int ccx = static_cast<int>(std::floor((x - origin_.x) / resolution_));
  const int ccy = static_cast<int>(std::floor((y - origin_.y) / resolution_));
  const int r_cells = static_cast<int>(std::ceil(radius / resolution_));
  // same inclusion test as unknown_fraction, evaluated at a cell center
  auto inside = [&](int cx, int cy) {
    const double wx = origin_.x + (cx + 0.5) * resolution_;
    const double wy = origin_.y + (cy + 0.5) * resolution_;
    return std::hypot(wx - x, wy - y) <= radius;
  };
  int total = 0;
  int unknown = 0;
  for (int dy = -r_cells; dy <= r_cells; ++dy) {
    const int cy = ccy + dy;
    // the inclusion test is monotone in |wx - x| on each side of the
    // center column: locate the row span by walking an analytic guess
    const double wy = origin_.y + (cy + 0.5) * resolution_;
    const double rem = radius * radius - (wy - y) * (wy - y);
    if (rem < 0.0) continue;
    const int reach = static_cast<int>(std::floor(std::sqrt(rem) / resolution_)) + 2;
    int hi = ccx + reach;
    while (hi >= ccx && !inside(hi, cy)) --hi;
    if (hi < ccx) continue;  // not even the center column qualifies
    int lo = ccx - reach;
    while (lo <= ccx && !inside(lo, cy)) ++lo;
    total += hi - lo + 1;
    const int clo = std::max(lo, 0);
    const int chi = std::min(hi, width_ - 1);
    if (cy < 0 || cy >= height_ || clo > chi) {
      unknown += hi - lo + 1;  // whole span is off-grid
      continue;
    }
    unknown += (clo - lo) + (hi - chi);  // clipped margins count as unknown
    const int* row = row_prefix_.data() + static_cast<std::size_t>(cy) * (width_ + 1);
    unknown += row[chi + 1] - row[clo];
  }
  return total == 0 ? 1.0 : static_cast<double>(unknown) / total;
}

std::vector<FrontierCandidate> filter_frontiers(
    const std::vector<FrontierCandidate>& candidates, const core::OccupancyGrid& grid,
    const std::function<bool(double, double)>& reachable, int min_info_radius_cells,
    int max_age, int current_epoch) {
  std::vector<FrontierCandidate> kept;
  const double info_radius = min_info_radius_cells * grid.resolution();
  for (const auto& c : candidates) {
    if (current_epoch - c.created_at > max_age) continue;
    if (unknown_fraction(grid, c.x, c.y, info_radius) <= 0.0) continue;
    if (!reachable(c.x, c.y)) continue;
    bool dup = false;
    for (const auto& k : kept) {
      if (std::abs(k.x - c.x) <= grid.resolution() && std::abs(k.y - c.y) <= grid.resolution()) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(c);
  }
  return kept;
}

}  // namespace topo::mapping
