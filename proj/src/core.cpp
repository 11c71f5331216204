#include "topoexplore/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

namespace topo::core {

double normalize_angle(double theta) {
  double a = std::remainder(theta, 2.0 * kPi);
  if (a <= -kPi) a = kPi;
  return a;
}

Pose2 compose(const Pose2& a, const RelativePose2& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return Pose2(a.x + c * b.dx - s * b.dy, a.y + s * b.dx + c * b.dy,
               normalize_angle(a.theta + b.dtheta));
}

RelativePose2 between(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  return RelativePose2(c * ex + s * ey, -s * ex + c * ey, normalize_angle(b.theta - a.theta));
}

Pose2 inverse(const Pose2& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), normalize_angle(-p.theta));
}

bool InfoMatrix::is_symmetric(double rel_tol) const {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool InfoMatrix::is_psd(double rel_tol) const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  const double lmax = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -rel_tol * lmax;
}

bool PoseGraph::has_vertex(int id) const {
  const auto it = std::lower_bound(index_of_.begin(), index_of_.end(), id,
                                   [](const auto& p, int v) { return p.first < v; });
  return it != index_of_.end() && it->first == id;
}

void PoseGraph::insert_index(int id) {
  const auto it = std::lower_bound(index_of_.begin(), index_of_.end(), id,
                                   [](const auto& p, int v) { return p.first < v; });
  index_of_.insert(it, {id, static_cast<int>(vertices_.size())});
}

void PoseGraph::add_first_vertex(int id, const Pose2& pose) {
  if (!vertices_.empty()) throw std::invalid_argument("graph already has vertices");
  insert_index(id);
  vertices_.emplace_back(id, pose);
}

void PoseGraph::add_vertex(int id, const Pose2& pose,
                           const std::vector<GraphEdge>& attached_edges) {
  if (vertices_.empty()) {
    if (!attached_edges.empty()) throw std::invalid_argument("first vertex takes no edges");
    add_first_vertex(id, pose);
    return;
  }
  if (has_vertex(id)) throw std::invalid_argument("duplicate vertex id");
  if (attached_edges.empty())
    throw std::invalid_argument("new vertex must arrive with at least one edge");
  insert_index(id);
  vertices_.emplace_back(id, pose);
  for (const auto& e : attached_edges) add_edge(e);
}

void PoseGraph::add_vertex_unchecked(int id, const Pose2& pose) {
  if (has_vertex(id)) throw std::invalid_argument("duplicate vertex id");
  insert_index(id);
  vertices_.emplace_back(id, pose);
}

void PoseGraph::set_edge_info(std::size_t j, const InfoMatrix& info) {
  if (j >= edges_.size()) throw std::out_of_range("edge index out of range");
  edges_[j].info = info;
}

void PoseGraph::add_edge(const GraphEdge& e) {
  if (e.i == e.k) throw std::invalid_argument("self-loop edge");
  if (!has_vertex(e.i) || !has_vertex(e.k))
    throw std::invalid_argument("edge references unknown vertex");
  for (const auto& x : edges_) {
    const bool same_pair = (x.i == e.i && x.k == e.k) || (x.i == e.k && x.k == e.i);
    if (same_pair && x.kind == e.kind)
      throw std::invalid_argument("duplicate edge for vertex pair and kind");
  }
  edges_.push_back(e);
}

void PoseGraph::add_edge_unchecked(const GraphEdge& e) {
  if (e.i == e.k) throw std::invalid_argument("self-loop edge");
  if (!has_vertex(e.i) || !has_vertex(e.k))
    throw std::invalid_argument("edge references unknown vertex");
  edges_.push_back(e);
}

int PoseGraph::index_of(int id) const {
  const auto it = std::lower_bound(index_of_.begin(), index_of_.end(), id,
                                   [](const auto& p, int v) { return p.first < v; });
  if (it == index_of_.end() || it->first != id) throw std::invalid_argument("unknown vertex id");
  return it->second;
}

int PoseGraph::last_vertex_id() const {
  if (vertices_.empty()) throw std::invalid_argument("empty graph");
  return vertices_.back().first;
}

bool PoseGraph::is_connected() const {
  if (vertices_.size() <= 1) return true;
  std::vector<std::vector<int>> adj(vertices_.size());
  for (const auto& e : edges_) {
    const int a = index_of(e.i);
    const int b = index_of(e.k);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(vertices_.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t visited = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        q.push(w);
      }
    }
  }
  return visited == vertices_.size();
}

void WeightedPoseGraph::validate() const {
  if (weights.size() != base.num_edges())
    throw std::invalid_argument("weights/edges length mismatch");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("edge weight must be finite and nonnegative");
  }
}

OccupancyGrid::OccupancyGrid(double resolution, const Pose2& origin, int width, int height)
    : resolution_(resolution), origin_(origin), width_(width), height_(height) {
  if (resolution <= 0.0) throw std::invalid_argument("resolution must be positive");
  if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  if (origin.theta != 0.0) throw std::invalid_argument("grid origin must be axis-aligned");
  cells_.assign(static_cast<std::size_t>(width) * height, Cell::Unknown);
}

std::pair<int, int> OccupancyGrid::world_to_cell(double wx, double wy) const {
  return {static_cast<int>(std::floor((wx - origin_.x) / resolution_)),
          static_cast<int>(std::floor((wy - origin_.y) / resolution_))};
}

std::pair<double, double> OccupancyGrid::cell_to_world(int cx, int cy) const {
  return {origin_.x + (cx + 0.5) * resolution_, origin_.y + (cy + 0.5) * resolution_};
}

std::size_t OccupancyGrid::count(Cell c) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), c));
}

std::string OccupancyGrid::to_pgm() const {
  std::string out = "P5\n" + std::to_string(width_) + " " + std::to_string(height_) + "\n255\n";
  out.reserve(out.size() + cells_.size());
  for (int cy = 0; cy < height_; ++cy) {
    for (int cx = 0; cx < width_; ++cx) {
      const Cell c = at(cx, cy);
      out.push_back(c == Cell::Unknown ? char(128) : (c == Cell::Free ? char(254) : char(0)));
    }
  }
  return out;
}

void World::validate() const {
  std::vector<int> ids;
  for (const auto& lm : landmarks) {
    ids.push_back(lm.id);
    if (lm.x < bounds.xmin || lm.x > bounds.xmax || lm.y < bounds.ymin || lm.y > bounds.ymax)
      throw std::invalid_argument("landmark outside world bounds");
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("duplicate landmark id");
}

std::optional<double> nearest_wall_hit(const World& world, double px, double py, double qx,
                                       double qy) {
  const double rx = qx - px;
  const double ry = qy - py;
  std::optional<double> best;
  for (const auto& w : world.walls) {
    const double sx = w.x2 - w.x1;
    const double sy = w.y2 - w.y1;
    const double denom = rx * sy - ry * sx;
    if (std::abs(denom) < 1e-15) continue;  // parallel
    const double t = ((w.x1 - px) * sy - (w.y1 - py) * sx) / denom;
    const double u = ((w.x1 - px) * ry - (w.y1 - py) * rx) / denom;
    if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) {
      if (!best || t < *best) best = t;
    }
  }
  return best;
}

void SensorModel::validate() const {
  if (!(fov > 0.0 && fov <= 2.0 * kPi + 1e-12)) throw std::invalid_argument("fov out of range");
  if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
  if (range_noise_std < 0.0 || bearing_noise_std < 0.0 || odom_noise_std.minCoeff() < 0.0)
    throw std::invalid_argument("noise std must be nonnegative");
}

void LoopClosureParams::validate() const {
  if (!(0 < n_p_min && n_p_min <= n_p_max))
    throw std::invalid_argument("require 0 < n_p_min <= n_p_max");
}

namespace {

void append_num(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

void append_edge_line(std::string& out, const GraphEdge& e) {
  out += "EDGE_SE2 ";
  out += std::to_string(e.i) + " " + std::to_string(e.k);
  const double vals[] = {e.rel.dx,      e.rel.dy,      e.rel.dtheta,
                         e.info.m(0, 0), e.info.m(0, 1), e.info.m(0, 2),
                         e.info.m(1, 1), e.info.m(1, 2), e.info.m(2, 2)};
  for (double v : vals) {
    out += ' ';
    append_num(out, v);
  }
}

}  // namespace

std::string serialize_graph(const PoseGraph& g) {
  std::string out;
  for (const auto& [id, p] : g.vertices()) {
    out += "VERTEX_SE2 " + std::to_string(id);
    for (double v : {p.x, p.y, p.theta}) {
      out += ' ';
      append_num(out, v);
    }
    out += '\n';
  }
  for (const auto& e : g.edges()) {
    append_edge_line(out, e);
    out += '\n';
  }
  return out;
}

std::string serialize_graph(const WeightedPoseGraph& g) {
  g.validate();
  std::string out;
  for (const auto& [id, p] : g.base.vertices()) {
    out += "VERTEX_SE2 " + std::to_string(id);
    for (double v : {p.x, p.y, p.theta}) {
      out += ' ';
      append_num(out, v);
    }
    out += '\n';
  }
  for (std::size_t j = 0; j < g.base.num_edges(); ++j) {
    append_edge_line(out, g.base.edges()[j]);
    out += " # weight ";
    append_num(out, g.weights[j]);
    out += '\n';
  }
  return out;
}

WeightedPoseGraph parse_graph(const std::string& text) {
  WeightedPoseGraph g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  // vertices may legitimately arrive before their edges in the file, so
  // edges are buffered and attached after all vertices are read
  std::vector<std::pair<GraphEdge, double>> pending;
  std::vector<std::pair<int, Pose2>> verts;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "VERTEX_SE2") {
      int id;
      double x, y, th;
      if (!(ls >> id >> x >> y >> th))
        throw GraphParseError(lineno, "malformed VERTEX_SE2 at line " + std::to_string(lineno));
      verts.emplace_back(id, Pose2(x, y, th));
    } else if (tag == "EDGE_SE2") {
      GraphEdge e;
      double i11, i12, i13, i22, i23, i33;
      if (!(ls >> e.i >> e.k >> e.rel.dx >> e.rel.dy >> e.rel.dtheta >> i11 >> i12 >> i13 >>
            i22 >> i23 >> i33))
        throw GraphParseError(lineno, "malformed EDGE_SE2 at line " + std::to_string(lineno));
      e.rel.dtheta = normalize_angle(e.rel.dtheta);
      e.info.m << i11, i12, i13, i12, i22, i23, i13, i23, i33;
      double weight = -1.0;
      std::string hash, word;
      if (ls >> hash && hash == "#" && ls >> word && word == "weight") {
        if (!(ls >> weight))
          throw GraphParseError(lineno, "malformed weight at line " + std::to_string(lineno));
      }
      pending.emplace_back(e, weight);
    } else {
      throw GraphParseError(lineno, "unknown record '" + tag + "' at line " + std::to_string(lineno));
    }
  }
  for (const auto& [id, p] : verts) g.base.add_vertex_unchecked(id, p);
  for (auto& [e, w] : pending) {
    g.base.add_edge(e);
    g.weights.push_back(w);
  }
  return g;
}

World parse_world(const std::string& text) {
  World w;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "LANDMARK") {
      Landmark lm;
      if (!(ls >> lm.id >> lm.x >> lm.y))
        throw std::runtime_error("parse error: line " + std::to_string(lineno));
      w.landmarks.push_back(lm);
    } else if (tag == "WALL") {
      Segment s;
      if (!(ls >> s.x1 >> s.y1 >> s.x2 >> s.y2))
        throw std::runtime_error("parse error: line " + std::to_string(lineno));
      w.walls.push_back(s);
    } else if (tag == "BOUNDS") {
      if (!(ls >> w.bounds.xmin >> w.bounds.ymin >> w.bounds.xmax >> w.bounds.ymax))
        throw std::runtime_error("parse error: line " + std::to_string(lineno));
    } else {
      throw std::runtime_error("parse error: line " + std::to_string(lineno));
    }
  }
  w.validate();
  return w;
}

World load_world(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open world file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_world(ss.str());
}

}  // namespace topo::core
