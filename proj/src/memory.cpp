#include "covln/memory.hpp"

#include <json.hpp>

namespace covln {

const char* to_string(NodeStatus s) { return s == NodeStatus::Visited ? "visited" : "observed"; }

std::string to_string(const Provenance& p) {
  return p.is_self() ? std::string("self") : "peer:" + std::to_string(*p.peer);
}

NodeKey namespaced_key(const ViewpointId& vid, int origin) { return vid + "@" + std::to_string(origin); }

const NodePayload& MemoryGraph::node(const NodeKey& key) const {
  const auto it = nodes_.find(key);
  if (it == nodes_.end()) {
    throw InvalidInput("memory of agent " + std::to_string(agent_id_) + " has no node '" + key + "'");
  }
  return it->second;
}

void MemoryGraph::check_embedding(const std::optional<Embedding>& e, const std::string& where) {
  if (!e) return;
  if (embedding_dim_ && *embedding_dim_ != e->size()) {
    throw InvalidInput("embedding for '" + where + "' has dimension " + std::to_string(e->size()) +
                       ", memory uses " + std::to_string(*embedding_dim_));
  }
}

void MemoryGraph::record_visit(const ViewpointId& v, std::span<const Observation> observed, int t) {
  for (const auto& obs : observed) {
    if (!(obs.distance > 0.0)) {
      throw InvalidInput("observation of '" + obs.id + "' from '" + v + "' has non-positive distance");
    }
    if (obs.id == v) throw InvalidInput("viewpoint '" + v + "' cannot observe itself");
    check_embedding(obs.embedding, obs.id);
  }

  if (auto it = nodes_.find(v); it != nodes_.end()) {
    auto& p = it->second;
    p.status = NodeStatus::Visited;
    if (!p.provenance.is_self()) {
      p.promoted_from_peer = p.provenance.peer;
      p.provenance = Provenance::self();
    }
    p.first_seen_step = std::min(p.first_seen_step, t);
  } else {
    insert_node(v, {v, NodeStatus::Visited, std::nullopt, std::nullopt, Provenance::self(), t, std::nullopt});
  }

  for (const auto& obs : observed) {
    if (auto it = nodes_.find(obs.id); it != nodes_.end()) {
      auto& p = it->second;
      p.first_seen_step = std::min(p.first_seen_step, t);
      if (!p.embedding && obs.embedding) p.embedding = obs.embedding;
      if (!p.position && obs.position) p.position = obs.position;
    } else {
      insert_node(obs.id, {obs.id, NodeStatus::Observed, obs.embedding, obs.position, Provenance::self(), t,
                           std::nullopt});
    }
    auto [eit, inserted] = edges_.try_emplace(EdgeKey::of(v, obs.id), MemoryEdge{obs.distance, Provenance::self()});
    if (!inserted) eit->second.provenance = Provenance::self();
  }
}

bool MemoryGraph::insert_node(const NodeKey& key, NodePayload payload) {
  if (nodes_.contains(key)) return false;
  check_embedding(payload.embedding, key);
  if (payload.embedding && !embedding_dim_) embedding_dim_ = payload.embedding->size();
  nodes_.emplace(key, std::move(payload));
  return true;
}

bool MemoryGraph::insert_edge(const NodeKey& a, const NodeKey& b, MemoryEdge edge) {
  if (!nodes_.contains(a) || !nodes_.contains(b)) throw InvalidInput("edge " + a + "-" + b + " has a missing endpoint");
  auto key = EdgeKey::of(a, b);
  if (a == b || rejected_.contains(key)) return false;
  return edges_.try_emplace(std::move(key), edge).second;
}

bool MemoryGraph::insert_bridge(const NodeKey& a, const NodeKey& b, double weight) {
  if (!nodes_.contains(a) || !nodes_.contains(b)) {
    throw InvalidInput("bridge " + a + "-" + b + " has a missing endpoint");
  }
  auto key = EdgeKey::of(a, b);
  if (a == b || rejected_.contains(key) || edges_.contains(key)) return false;
  return bridges_.try_emplace(std::move(key), weight).second;
}

void MemoryGraph::reject_link(const NodeKey& a, const NodeKey& b) {
  auto key = EdgeKey::of(a, b);
  edges_.erase(key);
  bridges_.erase(key);
  rejected_.insert(std::move(key));
}

void MemoryGraph::fold_node(const NodeKey& from, const NodeKey& into) {
  if (from == into) return;
  auto fit = nodes_.find(from);
  if (fit == nodes_.end()) throw InvalidInput("cannot fold missing node '" + from + "'");
  if (!nodes_.contains(into)) nodes_.emplace(into, fit->second);
  nodes_.erase(from);

  auto other_end = [&](const EdgeKey& k) { return k.a == from ? k.b : k.a; };
  auto touches = [&](const EdgeKey& k) { return k.a == from || k.b == from; };

  std::vector<std::pair<EdgeKey, MemoryEdge>> moved_edges;
  for (auto it = edges_.begin(); it != edges_.end();) {
    if (touches(it->first)) {
      moved_edges.emplace_back(it->first, it->second);
      it = edges_.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [k, e] : moved_edges) {
    const auto x = other_end(k);
    if (x != into && !rejected_.contains(EdgeKey::of(into, x))) edges_.try_emplace(EdgeKey::of(into, x), e);
  }

  std::vector<std::pair<EdgeKey, double>> moved_bridges;
  for (auto it = bridges_.begin(); it != bridges_.end();) {
    if (touches(it->first)) {
      moved_bridges.emplace_back(it->first, it->second);
      it = bridges_.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<EdgeKey> moved_rejected;
  for (auto it = rejected_.begin(); it != rejected_.end();) {
    if (touches(*it)) {
      moved_rejected.push_back(*it);
      it = rejected_.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& k : moved_rejected) {
    const auto x = other_end(k);
    if (x != into) rejected_.insert(EdgeKey::of(into, x));
  }
  for (const auto& [k, w] : moved_bridges) {
    const auto x = other_end(k);
    if (x != into) insert_bridge(into, x, w);
  }
}

MemoryGraph new_memory(int agent_id, const ViewpointId& start, std::optional<Embedding> start_embedding,
                       std::optional<Vec3> start_position) {
  MemoryGraph m(agent_id);
  m.insert_node(start, {start, NodeStatus::Visited, std::move(start_embedding), start_position, Provenance::self(), 0,
                        std::nullopt});
  return m;
}

std::vector<NodeKey> frontiers(const MemoryGraph& m) {
  std::vector<NodeKey> out;
  for (const auto& [key, p] : m.nodes()) {
    if (p.status == NodeStatus::Observed) out.push_back(key);
  }
  return out;
}

std::string memory_to_json(const MemoryGraph& m) {
  using json = nlohmann::json;
  json doc;
  doc["agent_id"] = m.agent_id();
  json nodes = json::array();
  for (const auto& [key, p] : m.nodes()) {
    json n{{"key", key},
           {"viewpoint_id", p.viewpoint_id},
           {"status", to_string(p.status)},
           {"provenance", to_string(p.provenance)},
           {"first_seen_step", p.first_seen_step}};
    if (p.promoted_from_peer) n["promoted_from_peer"] = *p.promoted_from_peer;
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& [k, e] : m.edges()) {
    edges.push_back({{"a", k.a}, {"b", k.b}, {"w", e.weight}, {"provenance", to_string(e.provenance)}});
  }
  doc["edges"] = std::move(edges);
  json bridges = json::array();
  for (const auto& [k, w] : m.bridges()) bridges.push_back({{"a", k.a}, {"b", k.b}, {"w", w}});
  doc["bridges"] = std::move(bridges);
  return doc.dump(1);
}

}  // namespace covln
