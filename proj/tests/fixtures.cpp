#include "fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace fixture {

using covln::EnvGraph;
using covln::MatchCandidate;
using covln::MatchMode;
using covln::MemoryGraph;
using covln::NodePayload;
using covln::NodeStatus;
using covln::Provenance;

EnvGraph grid(int rows, int cols, double spacing, const std::string& scan) {
  return covln::generate_grid({rows, cols, spacing}, 0, scan);
}

EnvGraph five_node() {
  EnvGraph g("five");
  g.add_viewpoint({"a", {0, 0, 0}});
  g.add_viewpoint({"b", {1, 0, 0}});
  g.add_viewpoint({"c", {0, 1, 0}});
  g.add_viewpoint({"d", {1, 1, 0}});
  g.add_viewpoint({"e", {2, 1, 0}});
  g.add_edge("a", "b", 1.0);
  g.add_edge("a", "c", 1.0);
  g.add_edge("b", "d", 1.0);
  g.add_edge("c", "d", 1.0);
  g.add_edge("d", "e", 2.0);
  g.add_edge("b", "e", 4.0);
  g.add_edge("a", "e", 5.0);
  return g;
}

EnvGraph decoy_corridor() {
  EnvGraph g("decoy");
  g.add_viewpoint({"s", {0, 0, 0}});
  const std::vector<std::pair<std::string, covln::Vec3>> arms = {
      {"a", {0, 1, 0}}, {"b", {0, -1, 0}}, {"c", {-1, 0, 0}}, {"d", {-0.7071067811865476, 0.7071067811865476, 0}}};
  for (const auto& [name, dir] : arms) {
    std::string prev = "s";
    for (int k = 1; k <= 3; ++k) {
      const auto id = name + std::to_string(k);
      g.add_viewpoint({id, {dir.x * k, dir.y * k, 0}});
      g.add_edge(prev, id);
      prev = id;
    }
  }
  std::string prev = "s";
  for (int k = 1; k <= 5; ++k) {
    const auto id = k < 5 ? "zc" + std::to_string(k) : std::string("zg");
    g.add_viewpoint({id, {2.0 * k, 0, 0}});
    g.add_edge(prev, id);
    prev = id;
  }
  return g;
}

EnvGraph twin_islands(std::uint64_t seed, int n_per_side) {
  EnvGraph out("islands");
  const covln::RandomGeometricParams params{n_per_side, 4.0, 15.0, 15.0};
  const std::vector<std::pair<std::string, double>> sides = {{"L", 0.0}, {"R", 100.0}};
  for (std::size_t s = 0; s < sides.size(); ++s) {
    const auto& [prefix, dx] = sides[s];
    const auto part = covln::generate_random_geometric(params, covln::mix_seed(seed, s));
    for (const auto& vp : part.viewpoints()) {
      out.add_viewpoint({prefix + vp.id, {vp.position.x + dx, vp.position.y, vp.position.z}});
    }
    for (const auto& [k, w] : part.edges()) out.add_edge(prefix + k.a, prefix + k.b, w);
  }
  return out;
}

covln::Episode episode(const std::string& id, const std::string& scan, std::vector<std::string> path) {
  return {id, scan, std::move(path), std::nullopt};
}

std::vector<covln::Episode> random_corpus(covln::Rng& rng, int max_episodes, int max_scans) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "f"};
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_episodes)));
  const int scans = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_scans)));
  std::vector<int> numbers(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) numbers[static_cast<std::size_t>(k)] = k;
  rng.shuffle(std::span<int>(numbers));

  std::vector<covln::Episode> out;
  for (int k = 0; k < n; ++k) {
    std::vector<std::string> path;
    const auto len = 1 + rng.below(4);
    for (std::uint64_t p = 0; p < len; ++p) path.push_back(alphabet[rng.below(alphabet.size())]);
    char id[16];
    std::snprintf(id, sizeof id, "e%03d", numbers[static_cast<std::size_t>(k)]);
    out.push_back(episode(id, "s" + std::to_string(rng.below(static_cast<std::uint64_t>(scans))), std::move(path)));
  }
  return out;
}

namespace {

MemoryGraph random_memory(covln::Rng& rng, int agent, bool embed, const std::vector<int>& relays, double echo_p) {
  MemoryGraph m(agent);
  const auto n = 1 + rng.below(12);
  std::set<std::string> used;
  while (m.size() < n) {
    const auto vid = "v" + std::to_string(rng.below(16));
    std::optional<int> peer;
    const double u = rng.uniform();
    if (u < echo_p) peer = 0;
    else if (u < echo_p + 0.3) peer = relays[rng.below(relays.size())];
    const auto key = (embed && peer) ? covln::namespaced_key(vid, *peer) : vid;
    if (used.contains(key)) continue;
    used.insert(key);
    NodePayload p;
    p.viewpoint_id = vid;
    p.status = rng.uniform() < 0.5 ? NodeStatus::Visited : NodeStatus::Observed;
    p.provenance = peer ? Provenance::from_peer(*peer) : Provenance::self();
    p.first_seen_step = static_cast<int>(rng.below(10));
    m.insert_node(key, std::move(p));
  }
  std::vector<std::string> keys;
  for (const auto& [k, p] : m.nodes()) keys.push_back(k);
  for (std::size_t a = 0; a < keys.size(); ++a) {
    for (std::size_t b = a + 1; b < keys.size(); ++b) {
      const double u = rng.uniform();
      if (u < 0.25) {
        std::optional<int> peer;
        if (rng.uniform() < 0.3) peer = relays[rng.below(relays.size())];
        m.insert_edge(keys[a], keys[b],
                      {rng.uniform(0.5, 3.0), peer ? Provenance::from_peer(*peer) : Provenance::self()});
      } else if (embed && u < 0.32) {
        m.insert_bridge(keys[a], keys[b], rng.uniform(0.0, 1.0));
      } else if (u < 0.35) {
        m.reject_link(keys[a], keys[b]);
      }
    }
  }
  return m;
}

std::vector<std::string> self_keys(const MemoryGraph& m) {
  std::vector<std::string> out;
  for (const auto& [k, p] : m.nodes()) {
    if (p.provenance.is_self()) out.push_back(k);
  }
  return out;
}

}  // namespace

FusionCase random_fusion_case(covln::Rng& rng, MatchMode mode) {
  const bool embed = mode == MatchMode::Embed;
  FusionCase fc;
  fc.m_i = random_memory(rng, 0, embed, {1, 2, 3}, 0.0);
  fc.m_j = random_memory(rng, 1, embed, {2, 3}, 0.15);
  fc.alpha = embed ? rng.uniform(0.5, 3.0) : 2.0;

  auto a_keys = self_keys(fc.m_i);
  auto b_keys = self_keys(fc.m_j);
  if (embed) {
    rng.shuffle(std::span<std::string>(a_keys));
    rng.shuffle(std::span<std::string>(b_keys));
    const auto k = rng.below(std::min(a_keys.size(), b_keys.size()) + 1);
    for (std::size_t t = 0; t < k; ++t) {
      const double c = rng.uniform(0.9, 1.0);
      fc.matches.push_back({a_keys[t], b_keys[t], c, covln::est_distance(c, fc.alpha), MatchMode::Embed});
    }
  } else {
    for (const auto& a : a_keys) {
      if (std::find(b_keys.begin(), b_keys.end(), a) != b_keys.end() && rng.uniform() < 0.7) {
        fc.matches.push_back({a, a, 1.0, 0.0, MatchMode::Id});
      }
    }
  }
  return fc;
}

}  // namespace fixture
