#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "covln/env.hpp"

namespace covln {

using Embedding = std::vector<double>;
using NodeKey = std::string;

enum class NodeStatus { Observed, Visited };

const char* to_string(NodeStatus s);

/// Where a piece of memory came from: the owning agent itself, or a peer.
struct Provenance {
  std::optional<int> peer;

  static Provenance self() { return {}; }
  static Provenance from_peer(int agent) { return {agent}; }
  bool is_self() const { return !peer.has_value(); }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::string to_string(const Provenance& p);

struct NodePayload {
  ViewpointId viewpoint_id;
  NodeStatus status = NodeStatus::Observed;
  std::optional<Embedding> embedding;
  /// Metric position when the observer reports one (used by coordinate matching).
  std::optional<Vec3> position;
  Provenance provenance;
  int first_seen_step = 0;
  /// Set when a peer-imported node was later reached physically by the owner.
  std::optional<int> promoted_from_peer;

  friend bool operator==(const NodePayload&, const NodePayload&) = default;
};

struct MemoryEdge {
  double weight = 0.0;
  Provenance provenance;

  friend bool operator==(const MemoryEdge&, const MemoryEdge&) = default;
};

/// One neighbour reported when visiting a viewpoint.
struct Observation {
  ViewpointId id;
  double distance = 0.0;
  std::optional<Embedding> embedding;
  std::optional<Vec3> position;
};

/// Key under which a node imported from `origin` is stored when imported
/// nodes must stay distinct from the owner's own nodes (embedding matching).
NodeKey namespaced_key(const ViewpointId& vid, int origin);

/// Private topological memory of one agent.
///
/// Nodes are keyed by NodeKey. The owner's own nodes use the viewpoint id as
/// key; nodes imported from peers use either the viewpoint id (id/coordinate
/// matching) or namespaced_key() (embedding matching, where the owner cannot
/// tell two agents' nodes apart by id). Bridge edges are the cross-agent links
/// created by embedding-based fusion. Links that failed a physical traversal
/// are remembered in rejected_links() so that re-fusion cannot resurrect them.
class MemoryGraph {
 public:
  explicit MemoryGraph(int agent_id = 0) : agent_id_(agent_id) {}

  int agent_id() const { return agent_id_; }
  const std::map<NodeKey, NodePayload>& nodes() const { return nodes_; }
  const std::map<EdgeKey, MemoryEdge>& edges() const { return edges_; }
  const std::map<EdgeKey, double>& bridges() const { return bridges_; }
  const std::set<EdgeKey>& rejected_links() const { return rejected_; }

  bool contains(const NodeKey& key) const { return nodes_.contains(key); }
  /// Throws InvalidInput for an unknown key.
  const NodePayload& node(const NodeKey& key) const;
  std::size_t size() const { return nodes_.size(); }
  std::optional<std::size_t> embedding_dim() const { return embedding_dim_; }

  /// Marks `v` Visited (promoting it if it was Observed or peer-imported),
  /// adds every observed neighbour as Observed if absent, and links `v` to each
  /// neighbour. Repeating an identical call is a no-op; first_seen_step keeps
  /// the earliest step. Throws InvalidInput on a non-positive distance.
  void record_visit(const ViewpointId& v, std::span<const Observation> observed, int t);

  // Low-level mutation used by fusion and by the transition function.
  // insert_* never overwrite existing content.
  bool insert_node(const NodeKey& key, NodePayload payload);
  bool insert_edge(const NodeKey& a, const NodeKey& b, MemoryEdge edge);
  bool insert_bridge(const NodeKey& a, const NodeKey& b, double weight);
  /// Drops the edge or bridge between a and b and blacklists the pair
  /// against re-insertion.
  void reject_link(const NodeKey& a, const NodeKey& b);
  /// Re-homes every edge and bridge of `from` onto `into` and deletes `from`.
  /// If `into` does not exist, `from` is simply renamed.
  void fold_node(const NodeKey& from, const NodeKey& into);

  friend bool operator==(const MemoryGraph&, const MemoryGraph&) = default;

 private:
  void check_embedding(const std::optional<Embedding>& e, const std::string& where);

  int agent_id_;
  std::map<NodeKey, NodePayload> nodes_;
  std::map<EdgeKey, MemoryEdge> edges_;
  std::map<EdgeKey, double> bridges_;
  std::set<EdgeKey> rejected_;
  std::optional<std::size_t> embedding_dim_;
};

/// A memory holding only the start node, Visited, with no edges.
MemoryGraph new_memory(int agent_id, const ViewpointId& start, std::optional<Embedding> start_embedding = {},
                       std::optional<Vec3> start_position = {});

/// Observed (never visited) node keys, sorted.
std::vector<NodeKey> frontiers(const MemoryGraph& m);

/// Debug dump: nodes (key, viewpoint, status, provenance, first_seen_step), edges, bridges.
std::string memory_to_json(const MemoryGraph& m);

}  // namespace covln
