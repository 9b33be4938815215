#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covln/error.hpp"

namespace covln {

using ViewpointId = std::string;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

struct Viewpoint {
  ViewpointId id;
  Vec3 position;

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

/// Unordered pair of ids, stored with first <= second.
struct EdgeKey {
  ViewpointId a;
  ViewpointId b;

  static EdgeKey of(ViewpointId x, ViewpointId y) {
    return x <= y ? EdgeKey{std::move(x), std::move(y)} : EdgeKey{std::move(y), std::move(x)};
  }
  auto operator<=>(const EdgeKey&) const = default;
  bool operator==(const EdgeKey&) const = default;
};

/// Ground-truth environment: undirected weighted viewpoint graph.
/// Immutable once built; viewpoints are kept sorted by id.
class EnvGraph {
 public:
  EnvGraph() = default;
  explicit EnvGraph(std::string scan_id) : scan_id_(std::move(scan_id)) {}

  /// Throws InvalidInput on a duplicate id or non-finite position.
  void add_viewpoint(Viewpoint vp);
  /// Throws InvalidInput on unknown endpoints, self loops, duplicates or w <= 0.
  void add_edge(const ViewpointId& a, const ViewpointId& b, double weight);
  /// Adds an edge weighted by the Euclidean distance of its endpoints.
  void add_edge(const ViewpointId& a, const ViewpointId& b);

  const std::string& scan_id() const { return scan_id_; }
  std::size_t size() const { return viewpoints_.size(); }
  bool empty() const { return viewpoints_.empty(); }
  bool contains(const ViewpointId& id) const { return index_.contains(id); }

  const std::vector<Viewpoint>& viewpoints() const { return viewpoints_; }
  const std::map<EdgeKey, double>& edges() const { return edges_; }

  /// Throws InvalidInput for an unknown id.
  const Viewpoint& viewpoint(const ViewpointId& id) const;
  const Vec3& position(const ViewpointId& id) const { return viewpoint(id).position; }

  /// Neighbours of `id` with edge weights, sorted by neighbour id.
  std::vector<std::pair<ViewpointId, double>> neighbors(const ViewpointId& id) const;
  std::optional<double> edge_weight(const ViewpointId& a, const ViewpointId& b) const;

  friend bool operator==(const EnvGraph& l, const EnvGraph& r) {
    return l.scan_id_ == r.scan_id_ && l.viewpoints_ == r.viewpoints_ && l.edges_ == r.edges_;
  }

 private:
  void reindex();

  std::string scan_id_;
  std::vector<Viewpoint> viewpoints_;
  std::map<ViewpointId, std::size_t> index_;
  std::map<EdgeKey, double> edges_;
  std::map<ViewpointId, std::map<ViewpointId, double>> adjacency_;
};

// --- generation -----------------------------------------------------------

struct GridParams {
  int rows = 0;
  int cols = 0;
  double spacing = 1.0;
};

struct RandomGeometricParams {
  int n = 0;
  double radius = 1.0;
  double extent_x = 10.0;
  double extent_y = 10.0;
};

enum class EnvKind { Grid, RandomGeometric };

/// Parses "grid" or "random-geometric" (alias "rgg"); throws InvalidInput otherwise.
EnvKind parse_env_kind(const std::string& text);

/// 4-adjacent grid, positions (col*spacing, row*spacing, 0).
EnvGraph generate_grid(const GridParams& params, std::uint64_t seed, std::string scan_id = "grid");

/// n uniform points in [0,extent_x) x [0,extent_y), edges between pairs at
/// distance <= radius, reduced to the largest connected component.
EnvGraph generate_random_geometric(const RandomGeometricParams& params, std::uint64_t seed,
                                   std::string scan_id = "rgg");

struct GeneratorParams {
  EnvKind kind = EnvKind::Grid;
  GridParams grid;
  RandomGeometricParams rgg;
};

/// Dispatches on `params.kind`; a pure function of (params, seed, scan_id).
EnvGraph generate_synthetic(const GeneratorParams& params, std::uint64_t seed, std::string scan_id);

// --- persistence ----------------------------------------------------------

/// Which validation rule a malformed environment file broke.
enum class EnvFileError { MalformedJson, DuplicateId, DanglingEndpoint, NonPositiveWeight, InvalidRecord };

class EnvFormatError : public InvalidInput {
 public:
  EnvFormatError(EnvFileError kind, const std::string& what) : InvalidInput(what), kind_(kind) {}
  EnvFileError kind() const { return kind_; }

 private:
  EnvFileError kind_;
};

EnvGraph env_from_json(const std::string& text);
std::string env_to_json(const EnvGraph& g);
EnvGraph load_env(const std::filesystem::path& path);
void save_env(const EnvGraph& g, const std::filesystem::path& path);

// --- queries --------------------------------------------------------------

struct PathResult {
  std::vector<ViewpointId> path;
  double length = 0.0;
};

/// Minimum-weight path; ties (within 1e-9 m) go to the lexicographically
/// smallest id sequence. std::nullopt when `to` is unreachable. Unknown ids
/// throw InvalidInput.
std::optional<PathResult> shortest_path(const EnvGraph& g, const ViewpointId& from, const ViewpointId& to);

/// Single-source variant used for corpus generation: every reachable target.
std::map<ViewpointId, PathResult> shortest_paths_from(const EnvGraph& g, const ViewpointId& from);

enum class AreaBucket { Small, Medium, Large };

const char* to_string(AreaBucket b);

/// Small < 250 m^2 <= Medium <= 450 m^2 < Large.
AreaBucket classify_area(double area_m2);

struct SceneArea {
  double area = 0.0;
  AreaBucket bucket = AreaBucket::Small;
};

/// Horizontal (x-y) bounding-box area of all viewpoints. Empty graph throws.
SceneArea scene_area(const EnvGraph& g);

}  // namespace covln
