#include "covln/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "covln/rng.hpp"
#include "graph_search.hpp"

namespace covln {

using json = nlohmann::json;

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void EnvGraph::add_viewpoint(Viewpoint vp) {
  if (index_.contains(vp.id)) throw InvalidInput("duplicate viewpoint id '" + vp.id + "'");
  if (!std::isfinite(vp.position.x) || !std::isfinite(vp.position.y) || !std::isfinite(vp.position.z)) {
    throw InvalidInput("viewpoint '" + vp.id + "' has a non-finite position");
  }
  adjacency_[vp.id];
  const auto at = std::lower_bound(viewpoints_.begin(), viewpoints_.end(), vp.id,
                                   [](const Viewpoint& v, const ViewpointId& id) { return v.id < id; });
  viewpoints_.insert(at, std::move(vp));
  reindex();
}

void EnvGraph::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < viewpoints_.size(); ++i) index_.emplace(viewpoints_[i].id, i);
}

void EnvGraph::add_edge(const ViewpointId& a, const ViewpointId& b, double weight) {
  if (!contains(a)) throw InvalidInput("edge endpoint '" + a + "' is not a viewpoint");
  if (!contains(b)) throw InvalidInput("edge endpoint '" + b + "' is not a viewpoint");
  if (a == b) throw InvalidInput("self loop on '" + a + "'");
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw InvalidInput("edge " + a + "-" + b + " has non-positive weight");
  }
  auto [it, inserted] = edges_.emplace(EdgeKey::of(a, b), weight);
  if (!inserted) throw InvalidInput("duplicate edge " + a + "-" + b);
  adjacency_[a][b] = weight;
  adjacency_[b][a] = weight;
}

void EnvGraph::add_edge(const ViewpointId& a, const ViewpointId& b) {
  add_edge(a, b, distance(position(a), position(b)));
}

const Viewpoint& EnvGraph::viewpoint(const ViewpointId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw InvalidInput("unknown viewpoint '" + id + "' in scan '" + scan_id_ + "'");
  return viewpoints_[it->second];
}

std::vector<std::pair<ViewpointId, double>> EnvGraph::neighbors(const ViewpointId& id) const {
  const auto it = adjacency_.find(id);
  if (it == adjacency_.end()) throw InvalidInput("unknown viewpoint '" + id + "'");
  return {it->second.begin(), it->second.end()};
}

std::optional<double> EnvGraph::edge_weight(const ViewpointId& a, const ViewpointId& b) const {
  const auto it = edges_.find(EdgeKey::of(a, b));
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

EnvKind parse_env_kind(const std::string& text) {
  if (text == "grid") return EnvKind::Grid;
  if (text == "random-geometric" || text == "rgg") return EnvKind::RandomGeometric;
  throw InvalidInput("unknown environment kind '" + text + "' (expected grid|random-geometric)");
}

namespace {

std::string numbered_id(std::size_t i, std::size_t count) {
  int width = 4;
  for (std::size_t c = count; c >= 10000; c /= 10) ++width;
  auto digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return "v" + digits;
}

}  // namespace

EnvGraph generate_grid(const GridParams& params, std::uint64_t /*seed*/, std::string scan_id) {
  EnvGraph g(std::move(scan_id));
  if (params.rows <= 0 || params.cols <= 0) return g;
  if (!(params.spacing > 0.0)) throw InvalidInput("grid spacing must be positive");
  const auto count = static_cast<std::size_t>(params.rows) * static_cast<std::size_t>(params.cols);
  auto id_of = [&](int r, int c) { return numbered_id(static_cast<std::size_t>(r * params.cols + c), count); };
  for (int r = 0; r < params.rows; ++r) {
    for (int c = 0; c < params.cols; ++c) {
      g.add_viewpoint({id_of(r, c), {c * params.spacing, r * params.spacing, 0.0}});
    }
  }
  for (int r = 0; r < params.rows; ++r) {
    for (int c = 0; c < params.cols; ++c) {
      if (c + 1 < params.cols) g.add_edge(id_of(r, c), id_of(r, c + 1));
      if (r + 1 < params.rows) g.add_edge(id_of(r, c), id_of(r + 1, c));
    }
  }
  return g;
}

EnvGraph generate_random_geometric(const RandomGeometricParams& params, std::uint64_t seed,
                                   std::string scan_id) {
  EnvGraph g(std::move(scan_id));
  if (params.n <= 0) return g;
  if (!(params.radius > 0.0)) throw InvalidInput("random-geometric radius must be positive");
  if (!(params.extent_x > 0.0) || !(params.extent_y > 0.0)) {
    throw InvalidInput("random-geometric extent must be positive");
  }
  const auto n = static_cast<std::size_t>(params.n);
  Rng rng(mix_seed(seed));
  std::vector<Vec3> points(n);
  for (auto& p : points) {
    p.x = rng.uniform(0.0, params.extent_x);
    p.y = rng.uniform(0.0, params.extent_y);
  }

  // Union-find over the radius graph to keep only the largest component.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(points[i], points[j]);
      if (d <= params.radius && d > 0.0) {
        pairs.emplace_back(i, j);
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<std::size_t> comp_size(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++comp_size[find(i)];
  // Largest component; ties go to the component holding the lowest index.
  std::size_t best_root = find(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (comp_size[find(i)] > comp_size[best_root]) best_root = find(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) == best_root) g.add_viewpoint({numbered_id(i, n), points[i]});
  }
  for (const auto& [i, j] : pairs) {
    if (find(i) == best_root) g.add_edge(numbered_id(i, n), numbered_id(j, n));
  }
  return g;
}

EnvGraph generate_synthetic(const GeneratorParams& params, std::uint64_t seed, std::string scan_id) {
  switch (params.kind) {
    case EnvKind::Grid: return generate_grid(params.grid, seed, std::move(scan_id));
    case EnvKind::RandomGeometric: return generate_random_geometric(params.rgg, seed, std::move(scan_id));
  }
  throw InvalidInput("invalid environment kind");
}

// --- persistence ----------------------------------------------------------

EnvGraph env_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw EnvFormatError(EnvFileError::MalformedJson, std::string("malformed environment JSON: ") + e.what());
  }
  auto invalid = [](const std::string& msg) { return EnvFormatError(EnvFileError::InvalidRecord, msg); };
  if (!doc.is_object()) throw invalid("environment JSON must be an object");
  if (!doc.contains("scan_id") || !doc["scan_id"].is_string()) throw invalid("missing string field 'scan_id'");
  if (!doc.contains("viewpoints") || !doc["viewpoints"].is_array()) throw invalid("missing array 'viewpoints'");

  EnvGraph g(doc["scan_id"].get<std::string>());
  for (const auto& rec : doc["viewpoints"]) {
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
      throw invalid("viewpoint record without string 'id': " + rec.dump());
    }
    const auto id = rec["id"].get<std::string>();
    const auto& pos = rec.contains("pos") ? rec["pos"] : json();
    if (!pos.is_array() || pos.size() != 3 || !std::all_of(pos.begin(), pos.end(), [](const json& v) { return v.is_number(); })) {
      throw invalid("viewpoint '" + id + "' needs numeric pos [x,y,z]");
    }
    if (g.contains(id)) throw EnvFormatError(EnvFileError::DuplicateId, "duplicate viewpoint id '" + id + "'");
    try {
      g.add_viewpoint({id, {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()}});
    } catch (const InvalidInput& e) {
      throw invalid(e.what());
    }
  }
  const json edges = doc.contains("edges") ? doc["edges"] : json::array();
  if (!edges.is_array()) throw invalid("'edges' must be an array");
  for (const auto& rec : edges) {
    if (!rec.is_object() || !rec.contains("a") || !rec.contains("b") || !rec["a"].is_string() || !rec["b"].is_string()) {
      throw invalid("edge record needs string 'a' and 'b': " + rec.dump());
    }
    const auto a = rec["a"].get<std::string>();
    const auto b = rec["b"].get<std::string>();
    for (const auto& end : {a, b}) {
      if (!g.contains(end)) {
        throw EnvFormatError(EnvFileError::DanglingEndpoint,
                             "edge " + a + "-" + b + " references unknown viewpoint '" + end + "'");
      }
    }
    double w = 0.0;
    if (rec.contains("w") && !rec["w"].is_null()) {
      if (!rec["w"].is_number()) throw invalid("edge " + a + "-" + b + " has non-numeric weight");
      w = rec["w"].get<double>();
      if (!(w > 0.0)) {
        throw EnvFormatError(EnvFileError::NonPositiveWeight,
                             "edge " + a + "-" + b + " has non-positive weight " + rec["w"].dump());
      }
    } else {
      w = distance(g.position(a), g.position(b));
    }
    try {
      g.add_edge(a, b, w);
    } catch (const InvalidInput& e) {
      throw invalid(e.what());
    }
  }
  return g;
}

std::string env_to_json(const EnvGraph& g) {
  json doc;
  doc["scan_id"] = g.scan_id();
  json vps = json::array();
  for (const auto& vp : g.viewpoints()) {
    vps.push_back({{"id", vp.id}, {"pos", {vp.position.x, vp.position.y, vp.position.z}}});
  }
  doc["viewpoints"] = std::move(vps);
  json edges = json::array();
  for (const auto& [key, w] : g.edges()) edges.push_back({{"a", key.a}, {"b", key.b}, {"w", w}});
  doc["edges"] = std::move(edges);
  return doc.dump(1);
}

EnvGraph load_env(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open environment file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return env_from_json(buf.str());
}

void save_env(const EnvGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write environment file " + path.string());
  out << env_to_json(g) << '\n';
}

// --- queries --------------------------------------------------------------

namespace {

detail::SearchGraph search_graph_of(const EnvGraph& g) {
  detail::SearchGraph sg;
  std::map<std::string_view, int> idx;
  for (const auto& vp : g.viewpoints()) idx.emplace(vp.id, sg.add_node(vp.id));
  for (const auto& [key, w] : g.edges()) sg.add_edge(idx.at(key.a), idx.at(key.b), w);
  return sg;
}

int index_of(const EnvGraph& g, const ViewpointId& id) {
  const auto& vps = g.viewpoints();
  const auto it = std::lower_bound(vps.begin(), vps.end(), id,
                                   [](const Viewpoint& v, const ViewpointId& x) { return v.id < x; });
  if (it == vps.end() || it->id != id) throw InvalidInput("unknown viewpoint '" + id + "'");
  return static_cast<int>(it - vps.begin());
}

PathResult materialise(const EnvGraph& g, const detail::SearchTree& t, int target) {
  PathResult r;
  r.length = t.dist[target];
  for (int v : t.path_to(target)) r.path.push_back(g.viewpoints()[v].id);
  return r;
}

}  // namespace

std::optional<PathResult> shortest_path(const EnvGraph& g, const ViewpointId& from, const ViewpointId& to) {
  const int src = index_of(g, from);
  const int dst = index_of(g, to);
  const auto sg = search_graph_of(g);
  const auto tree = detail::lex_dijkstra(sg, src);
  if (!tree.reached(dst)) return std::nullopt;
  return materialise(g, tree, dst);
}

std::map<ViewpointId, PathResult> shortest_paths_from(const EnvGraph& g, const ViewpointId& from) {
  const int src = index_of(g, from);
  const auto sg = search_graph_of(g);
  const auto tree = detail::lex_dijkstra(sg, src);
  std::map<ViewpointId, PathResult> out;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (tree.reached(static_cast<int>(v))) out.emplace(g.viewpoints()[v].id, materialise(g, tree, static_cast<int>(v)));
  }
  return out;
}

const char* to_string(AreaBucket b) {
  switch (b) {
    case AreaBucket::Small: return "small";
    case AreaBucket::Medium: return "medium";
    case AreaBucket::Large: return "large";
  }
  return "?";
}

AreaBucket classify_area(double area_m2) {
  if (area_m2 < 250.0) return AreaBucket::Small;
  if (area_m2 <= 450.0) return AreaBucket::Medium;
  return AreaBucket::Large;
}

SceneArea scene_area(const EnvGraph& g) {
  if (g.empty()) throw InvalidInput("scene area of an empty environment");
  const auto& vps = g.viewpoints();
  double min_x = vps.front().position.x, max_x = min_x;
  double min_y = vps.front().position.y, max_y = min_y;
  for (const auto& vp : vps) {
    min_x = std::min(min_x, vp.position.x);
    max_x = std::max(max_x, vp.position.x);
    min_y = std::min(min_y, vp.position.y);
    max_y = std::max(max_y, vp.position.y);
  }
  const double area = (max_x - min_x) * (max_y - min_y);
  return {area, classify_area(area)};
}

}  // namespace covln
