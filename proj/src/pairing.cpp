#include "covln/pairing.hpp"

#include <algorithm>
#include <fstream>
#include <list>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "covln/rng.hpp"

namespace covln {

using json = nlohmann::json;

void validate_episode(const Episode& ep, const EnvGraph& env) {
  if (ep.gt_path.empty()) throw InvalidInput("episode '" + ep.episode_id + "' has an empty path");
  if (ep.scan_id != env.scan_id()) {
    throw InvalidInput("episode '" + ep.episode_id + "' belongs to scan '" + ep.scan_id + "', not '" + env.scan_id() +
                       "'");
  }
  for (const auto& id : ep.gt_path) {
    if (!env.contains(id)) throw InvalidInput("episode '" + ep.episode_id + "' references unknown viewpoint '" + id + "'");
  }
  for (std::size_t k = 1; k < ep.gt_path.size(); ++k) {
    if (!env.edge_weight(ep.gt_path[k - 1], ep.gt_path[k])) {
      throw InvalidInput("episode '" + ep.episode_id + "' steps between non-adjacent viewpoints " + ep.gt_path[k - 1] +
                         " and " + ep.gt_path[k]);
    }
  }
}

std::size_t overlap_count(std::span<const ViewpointId> p, std::span<const ViewpointId> q) {
  const std::set<std::string_view> a(p.begin(), p.end());
  std::set<std::string_view> seen;
  std::size_t n = 0;
  for (const auto& id : q) {
    if (a.contains(id) && seen.insert(id).second) ++n;
  }
  return n;
}

namespace {

bool compatible(const Episode& a, const Episode& b) { return a.gt_path != b.gt_path && a.start() != b.start(); }

template <typename ChoosePartner>
Pairing pair_by_scan(std::span<const Episode> episodes, std::uint64_t seed, ChoosePartner choose) {
  std::map<std::string, std::vector<Episode>> by_scan;
  for (const auto& ep : episodes) by_scan[ep.scan_id].push_back(ep);

  Pairing out;
  for (auto& [scan, group] : by_scan) {
    Rng rng(seed);
    rng.shuffle(std::span<Episode>(group));
    std::list<Episode> remaining(group.begin(), group.end());
    while (!remaining.empty()) {
      Episode a = std::move(remaining.front());
      remaining.pop_front();
      if (remaining.empty()) {
        out.first.push_back(a);
        out.second.push_back(std::move(a));
        break;
      }
      auto partner = choose(a, remaining);
      if (partner != remaining.end()) {
        out.first.push_back(std::move(a));
        out.second.push_back(std::move(*partner));
        remaining.erase(partner);
      } else {
        out.first.push_back(a);
        out.second.push_back(std::move(a));
      }
    }
  }
  return out;
}

}  // namespace

Pairing pair_prior(std::span<const Episode> episodes, std::uint64_t seed) {
  return pair_by_scan(episodes, seed, [](const Episode& a, std::list<Episode>& pool) {
    auto best = pool.end();
    std::size_t best_overlap = 0;
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      if (!compatible(a, *it)) continue;
      const std::size_t ov = overlap_count(a.gt_path, it->gt_path);
      if (best == pool.end() || ov > best_overlap || (ov == best_overlap && it->episode_id < best->episode_id)) {
        best = it;
        best_overlap = ov;
      }
    }
    return best;
  });
}

Pairing pair_random(std::span<const Episode> episodes, std::uint64_t seed) {
  return pair_by_scan(episodes, seed, [](const Episode& a, std::list<Episode>& pool) {
    return std::find_if(pool.begin(), pool.end(), [&](const Episode& b) { return compatible(a, b); });
  });
}

PairingStrategy parse_pairing_strategy(const std::string& text) {
  if (text == "prior") return PairingStrategy::Prior;
  if (text == "random") return PairingStrategy::Random;
  throw InvalidInput("unknown pairing strategy '" + text + "' (expected prior|random)");
}

const char* to_string(PairingStrategy s) { return s == PairingStrategy::Prior ? "prior" : "random"; }

Pairing pair_episodes(std::span<const Episode> episodes, PairingStrategy strategy, std::uint64_t seed) {
  return strategy == PairingStrategy::Prior ? pair_prior(episodes, seed) : pair_random(episodes, seed);
}

PeerAssignment assign_peers(const Episode& primary, std::span<const Episode> pool, int n_peers) {
  if (n_peers < 0) throw InvalidInput("n_peers must be non-negative");
  std::vector<std::pair<std::size_t, const Episode*>> eligible;
  for (const auto& ep : pool) {
    if (ep.scan_id != primary.scan_id) {
      throw InvalidInput("peer pool episode '" + ep.episode_id + "' is from scan '" + ep.scan_id + "'");
    }
    if (ep.episode_id == primary.episode_id || !compatible(primary, ep)) continue;
    eligible.emplace_back(overlap_count(primary.gt_path, ep.gt_path), &ep);
  }
  std::sort(eligible.begin(), eligible.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second->episode_id < y.second->episode_id;
  });
  PeerAssignment out;
  const auto want = static_cast<std::size_t>(n_peers);
  for (std::size_t k = 0; k < std::min(want, eligible.size()); ++k) out.peers.push_back(*eligible[k].second);
  out.shortfall = want - out.peers.size();
  return out;
}

PairingStats pairing_stats(const Pairing& pairs) {
  if (pairs.size() == 0) throw InvalidInput("pairing statistics of an empty pairing");
  PairingStats s;
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs.is_self_pair(k)) {
      ++s.self_pairs;
    } else {
      ++s.cross_pairs;
      total += static_cast<double>(overlap_count(pairs.first[k].gt_path, pairs.second[k].gt_path));
    }
  }
  s.mean_overlap = s.cross_pairs == 0 ? 0.0 : total / static_cast<double>(s.cross_pairs);
  return s;
}

// --- persistence ----------------------------------------------------------

std::vector<Episode> episodes_from_jsonl(const std::string& text) {
  std::vector<Episode> out;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "episodes line " + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput(where + ": malformed JSON: " + e.what());
    }
    if (!rec.is_object()) throw InvalidInput(where + ": expected an object");
    for (const char* field : {"episode_id", "scan_id"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw InvalidInput(where + ": missing string field '" + field + "'");
      }
    }
    if (!rec.contains("path") || !rec["path"].is_array() || rec["path"].empty()) {
      throw InvalidInput(where + ": 'path' must be a non-empty array of ids");
    }
    Episode ep;
    ep.episode_id = rec["episode_id"].get<std::string>();
    ep.scan_id = rec["scan_id"].get<std::string>();
    for (const auto& id : rec["path"]) {
      if (!id.is_string()) throw InvalidInput(where + ": path ids must be strings");
      ep.gt_path.push_back(id.get<std::string>());
    }
    if (rec.contains("instruction") && rec["instruction"].is_string()) {
      ep.instruction = rec["instruction"].get<std::string>();
    }
    if (!ids.insert(ep.episode_id).second) throw InvalidInput(where + ": duplicate episode_id '" + ep.episode_id + "'");
    out.push_back(std::move(ep));
  }
  return out;
}

std::string episodes_to_jsonl(std::span<const Episode> episodes) {
  std::string out;
  for (const auto& ep : episodes) {
    json rec{{"episode_id", ep.episode_id}, {"scan_id", ep.scan_id}, {"path", ep.gt_path}};
    if (ep.instruction) rec["instruction"] = *ep.instruction;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open episode file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return episodes_from_jsonl(buf.str());
}

void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write episode file " + path.string());
  out << episodes_to_jsonl(episodes);
}

std::string pairing_to_json(const Pairing& pairs, PairingStrategy strategy, std::uint64_t seed) {
  json doc;
  doc["strategy"] = to_string(strategy);
  doc["seed"] = seed;
  json list = json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    list.push_back({{"first", pairs.first[k].episode_id},
                    {"second", pairs.second[k].episode_id},
                    {"scan_id", pairs.first[k].scan_id},
                    {"self_pair", pairs.is_self_pair(k)},
                    {"overlap", overlap_count(pairs.first[k].gt_path, pairs.second[k].gt_path)}});
  }
  doc["pairs"] = std::move(list);
  if (pairs.size() > 0) {
    const auto s = pairing_stats(pairs);
    doc["stats"] = {{"mean_overlap", s.mean_overlap}, {"cross_pairs", s.cross_pairs}, {"self_pairs", s.self_pairs}};
  }
  return doc.dump(1);
}

}  // namespace covln
