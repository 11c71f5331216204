#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <algorithm>
#include <vector>

namespace topo::core {

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}
};

struct RelativePose2 {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  RelativePose2() = default;
  RelativePose2(double dx_, double dy_, double dtheta_)
      : dx(dx_), dy(dy_), dtheta(normalize_angle(dtheta_)) {}
};

Pose2 compose(const Pose2& a, const RelativePose2& b);
RelativePose2 between(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& p);

/// 3x3 symmetric PSD information block attached to a graph edge.
struct InfoMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();

  InfoMatrix() = default;
  explicit InfoMatrix(const Eigen::Matrix3d& mat) : m(mat) {}

  bool is_symmetric(double rel_tol = 1e-10) const;
  bool is_psd(double rel_tol = 1e-9) const;
};

enum class EdgeKind : uint8_t { Odometry, LoopClosure };

struct GraphEdge {
  int i = 0;
  int k = 0;
  EdgeKind kind = EdgeKind::Odometry;
  RelativePose2 rel;
  InfoMatrix info;
};

/// Vertex ids at or above this offset belong to hallucinated branches, so
/// they can never collide with ids assigned by the SLAM frontend.
constexpr int kHallucinatedIdOffset = 1'000'000;

class PoseGraph {
 public:
  PoseGraph() = default;

  /// First vertex enters without an edge; every later vertex must arrive
  /// with at least one edge touching an existing vertex.
  void add_first_vertex(int id, const Pose2& pose);
  void add_vertex(int id, const Pose2& pose, const std::vector<GraphEdge>& attached_edges);
  void add_edge(const GraphEdge& e);

  /// Deserialization entry point: inserts a vertex without requiring an
  /// attached edge. Connectivity is re-checked by the consumer.
  void add_vertex_unchecked(int id, const Pose2& pose);

  /// Replace the information matrix of edge j in insertion order.
  void set_edge_info(std::size_t j, const InfoMatrix& info);

  /// add_edge without the duplicate scan, for callers that construct edges
  /// from sources already known to be duplicate-free.
  void add_edge_unchecked(const GraphEdge& e);

  bool has_vertex(int id) const;
  int index_of(int id) const;
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<std::pair<int, Pose2>>& vertices() const { return vertices_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  const Pose2& pose_of(int id) const { return vertices_[index_of(id)].second; }
  int last_vertex_id() const;

  bool is_connected() const;

 private:
  void insert_index(int id);

  std::vector<std::pair<int, Pose2>> vertices_;
  std::vector<GraphEdge> edges_;
  std::vector<std::pair<int, int>> index_of_;  // (id, vertex index), sorted by id
};

struct WeightedPoseGraph {
  PoseGraph base;
  std::vector<double> weights;  // gamma_j per edge, >= 0 and finite

  void validate() const;
};

enum class Cell : uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(double resolution, const Pose2& origin, int width, int height);

  double resolution() const { return resolution_; }
  const Pose2& origin() const { return origin_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cx < width_ && cy >= 0 && cy < height_;
  }

  Cell at(int cx, int cy) const { return cells_[idx(cx, cy)]; }
  void set(int cx, int cy, Cell c) { cells_[idx(cx, cy)] = c; }

  /// World point -> containing cell indices (may be out of bounds).
  std::pair<int, int> world_to_cell(double wx, double wy) const;
  /// Cell center in world coordinates.
  std::pair<double, double> cell_to_world(int cx, int cy) const;

  std::size_t count(Cell c) const;

  /// P5 graymap: unknown=128, free=254, occupied=0, row 0 = minimum y.
  std::string to_pgm() const;

 private:
  std::size_t idx(int cx, int cy) const { return static_cast<std::size_t>(cy) * width_ + cx; }

  double resolution_ = 0.1;
  Pose2 origin_;
  int width_ = 1;
  int height_ = 1;
  std::vector<Cell> cells_;
};

struct Segment {
  double x1, y1, x2, y2;
};

struct Landmark {
  int id;
  double x;
  double y;
};

struct Rect {
  double xmin, ymin, xmax, ymax;
};

struct World {
  std::vector<Landmark> landmarks;
  std::vector<Segment> walls;
  Rect bounds{0, 0, 1, 1};

  void validate() const;
};

/// Intersection parameter t in [0,1] along p->q of the nearest wall hit,
/// or nullopt if the segment is unobstructed.
std::optional<double> nearest_wall_hit(const World& world, double px, double py, double qx,
                                       double qy);

struct SensorModel {
  double fov = kPi / 2.0;          // full angular width; camera-like default
  double max_range = 4.0;          // meters
  double range_noise_std = 0.03;   // meters
  double bearing_noise_std = 0.01; // radians
  Eigen::Vector3d odom_noise_std{0.02, 0.02, 0.01};

  void validate() const;
};

struct LoopClosureParams {
  int n_p_min = 3;
  int n_p_max = 6;

  void validate() const;
};

// --- serialization -------------------------------------------------------

/// One record per line: VERTEX_SE2 / EDGE_SE2 with upper-triangular
/// information, 9 significant digits. Weighted graphs append a
/// "# weight <gamma>" comment on each edge line.
std::string serialize_graph(const PoseGraph& g);
std::string serialize_graph(const WeightedPoseGraph& g);

struct GraphParseError : std::runtime_error {
  int line;
  GraphParseError(int line_, const std::string& what)
      : std::runtime_error(what), line(line_) {}
};

/// Parses VERTEX_SE2/EDGE_SE2 text. Edges without a weight comment get
/// weight = dopt of their information matrix applied by the caller; here
/// missing weights are recorded as -1 placeholders.
WeightedPoseGraph parse_graph(const std::string& text);

/// Scene files: LANDMARK <id> <x> <y>, WALL <x1> <y1> <x2> <y2>,
/// BOUNDS <xmin> <ymin> <xmax> <ymax>.
World parse_world(const std::string& text);
World load_world(const std::string& path);

}  // namespace topo::core
