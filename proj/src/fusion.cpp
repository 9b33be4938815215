#include "covln/fusion.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace covln {

FusionPolicy parse_fusion(const std::string& text) {
  FusionPolicy p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidInput("fusion option '" + item + "' is not key=value");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "trigger") {
      if (value == "detect") p.trigger = FusionTrigger::OnDetection;
      else if (value == "covisit") p.trigger = FusionTrigger::OnCoVisit;
      else throw InvalidInput("fusion trigger must be detect|covisit, got '" + value + "'");
    } else if (key == "dir") {
      if (value == "bi") p.direction = FusionDirection::Bidirectional;
      else if (value == "later") p.direction = FusionDirection::ToLaterAgent;
      else throw InvalidInput("fusion dir must be bi|later, got '" + value + "'");
    } else if (key == "persist") {
      if (value == "on") p.persistent = true;
      else if (value == "off") p.persistent = false;
      else throw InvalidInput("fusion persist must be on|off, got '" + value + "'");
    } else {
      throw InvalidInput("unknown fusion option '" + key + "'");
    }
  }
  return p;
}

std::string describe(const FusionPolicy& p) {
  std::string out = "trigger=";
  out += p.trigger == FusionTrigger::OnDetection ? "detect" : "covisit";
  out += ",dir=";
  out += p.direction == FusionDirection::Bidirectional ? "bi" : "later";
  out += ",persist=";
  out += p.persistent ? "on" : "off";
  return out;
}

void fuse_into(MemoryGraph& m_i, const MemoryGraph& m_j, const MatchSet& matches) {
  for (const auto& m : matches) {
    if (!m_i.contains(m.node_a)) {
      throw InvalidInput("match references '" + m.node_a + "', absent from agent " + std::to_string(m_i.agent_id()));
    }
    if (!m_j.contains(m.node_b)) {
      throw InvalidInput("match references '" + m.node_b + "', absent from agent " + std::to_string(m_j.agent_id()));
    }
    if (m.mode != matches.front().mode) throw InvalidInput("match set mixes detection modes");
  }
  if (matches.empty()) return;

  const int owner = m_i.agent_id();
  const bool keep_distinct = matches.front().mode == MatchMode::Embed;

  std::map<NodeKey, NodeKey> merged;  // peer anchor -> owner node
  if (!keep_distinct) {
    for (const auto& m : matches) merged.emplace(m.node_b, m.node_a);
  }

  // Where each peer node lives in the fused graph, and with which origin.
  struct Placement {
    NodeKey key;
    int origin;
  };
  auto place = [&](const NodeKey& key, const NodePayload& p) -> std::optional<Placement> {
    if (const auto it = merged.find(key); it != merged.end()) return Placement{it->second, owner};
    const int origin = p.provenance.is_self() ? m_j.agent_id() : *p.provenance.peer;
    if (origin == owner) {
      // Our own knowledge echoed back by the peer.
      if (m_i.contains(p.viewpoint_id)) return Placement{p.viewpoint_id, owner};
      return std::nullopt;
    }
    return Placement{keep_distinct ? namespaced_key(p.viewpoint_id, origin) : p.viewpoint_id, origin};
  };

  std::map<NodeKey, Placement> placed;
  for (const auto& [key, p] : m_j.nodes()) {
    auto where = place(key, p);
    if (!where) continue;
    if (where->origin != owner && !m_i.contains(where->key)) {
      NodePayload copy = p;
      copy.provenance = Provenance::from_peer(where->origin);
      copy.promoted_from_peer.reset();
      m_i.insert_node(where->key, std::move(copy));
    }
    placed.emplace(key, std::move(*where));
  }

  auto edge_origin = [&](const Provenance& prov) { return prov.is_self() ? m_j.agent_id() : *prov.peer; };
  for (const auto& [k, e] : m_j.edges()) {
    const auto a = placed.find(k.a);
    const auto b = placed.find(k.b);
    if (a == placed.end() || b == placed.end()) continue;
    const int origin = edge_origin(e.provenance);
    if (origin == owner) continue;
    m_i.insert_edge(a->second.key, b->second.key, {e.weight, Provenance::from_peer(origin)});
  }
  for (const auto& [k, w] : m_j.bridges()) {
    const auto a = placed.find(k.a);
    const auto b = placed.find(k.b);
    if (a == placed.end() || b == placed.end()) continue;
    m_i.insert_bridge(a->second.key, b->second.key, w);
  }
  if (keep_distinct) {
    for (const auto& m : matches) {
      const auto b = placed.find(m.node_b);
      if (b == placed.end()) continue;
      m_i.insert_bridge(m.node_a, b->second.key, m.est_distance);
    }
  }
}

MemoryGraph fuse(const MemoryGraph& m_i, const MemoryGraph& m_j_snapshot, const MatchSet& matches) {
  MemoryGraph out = m_i;
  fuse_into(out, m_j_snapshot, matches);
  return out;
}

namespace {

bool visited_by_owner(const MemoryGraph& m, const NodeKey& key) {
  const auto& p = m.node(key);
  return p.status == NodeStatus::Visited && p.provenance.is_self();
}

// Earliest step at which the agent first saw any of its anchor nodes.
int arrival_step(const MemoryGraph& m, const MatchSet& matches, bool side_a) {
  int best = std::numeric_limits<int>::max();
  for (const auto& mt : matches) best = std::min(best, m.node(side_a ? mt.node_a : mt.node_b).first_seen_step);
  return best;
}

}  // namespace

std::vector<FusionEvent> maybe_fuse(FusionState& state, std::span<const MemoryGraph> snapshots,
                                    const FusionPolicy& policy, std::span<const PairMatches> pairs, int t) {
  std::vector<FusionEvent> events;
  for (const auto& pm : pairs) {
    if (pm.matches.empty()) continue;
    if (!policy.persistent && state.has_fired(pm.i, pm.j)) continue;
    const auto& mi = snapshots[static_cast<std::size_t>(pm.i)];
    const auto& mj = snapshots[static_cast<std::size_t>(pm.j)];
    if (policy.trigger == FusionTrigger::OnCoVisit) {
      const bool covisited = std::any_of(pm.matches.begin(), pm.matches.end(), [&](const MatchCandidate& m) {
        return visited_by_owner(mi, m.node_a) && visited_by_owner(mj, m.node_b);
      });
      if (!covisited) continue;
    }
    FusionEvent ev{t, pm.i, pm.j, pm.matches, {}};
    if (policy.direction == FusionDirection::Bidirectional) {
      ev.applied_to = {pm.i, pm.j};
    } else {
      const int arrive_i = arrival_step(mi, pm.matches, true);
      const int arrive_j = arrival_step(mj, pm.matches, false);
      if (arrive_i != arrive_j) ev.applied_to = {arrive_i > arrive_j ? pm.i : pm.j};
      else ev.applied_to = {std::max(pm.i, pm.j)};
    }
    state.mark_fired(pm.i, pm.j);
    events.push_back(std::move(ev));
  }
  return events;
}

void apply_events(std::span<MemoryGraph> live, std::span<const MemoryGraph> snapshots,
                  std::span<const FusionEvent> events) {
  for (const auto& ev : events) {
    for (const int target : ev.applied_to) {
      if (target == ev.agent_i) {
        fuse_into(live[static_cast<std::size_t>(ev.agent_i)], snapshots[static_cast<std::size_t>(ev.agent_j)],
                  ev.matches);
      } else {
        fuse_into(live[static_cast<std::size_t>(ev.agent_j)], snapshots[static_cast<std::size_t>(ev.agent_i)],
                  swapped(ev.matches));
      }
    }
  }
}

}  // namespace covln
