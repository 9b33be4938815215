#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covln/env.hpp"

namespace covln {

/// One navigation task. The ground-truth path starts at the start viewpoint
/// and ends at the goal; the instruction text is carried as metadata only.
struct Episode {
  std::string episode_id;
  std::string scan_id;
  std::vector<ViewpointId> gt_path;
  std::optional<std::string> instruction;

  const ViewpointId& start() const { return gt_path.front(); }
  const ViewpointId& goal() const { return gt_path.back(); }

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Throws InvalidInput unless the path is non-empty, lies in `env`, matches
/// its scan id, and every consecutive pair of ids is an environment edge.
void validate_episode(const Episode& ep, const EnvGraph& env);

/// Episodes navigated concurrently in one environment.
struct EpisodeGroup {
  int group_id = 0;
  std::vector<Episode> members;
  /// Members that run without sharing (self-paired duplicates).
  std::vector<bool> self_paired;
};

/// |set(p) ∩ set(q)|.
std::size_t overlap_count(std::span<const ViewpointId> p, std::span<const ViewpointId> q);

/// Two aligned lists; pair k is (first[k], second[k]). A self-pair repeats
/// the same episode on both sides.
struct Pairing {
  std::vector<Episode> first;
  std::vector<Episode> second;

  std::size_t size() const { return first.size(); }
  bool is_self_pair(std::size_t k) const { return first[k].episode_id == second[k].episode_id; }
};

/// Greedy prior-based pairing: per scan (ascending scan id), shuffle with
/// `seed`, pop the head, and pair it with the remaining episode of different
/// path and different start that shares the most viewpoints with it (ties to
/// the smallest episode id). Falls back to a self-pair when no partner exists.
Pairing pair_prior(std::span<const Episode> episodes, std::uint64_t seed);

/// Same protocol, but the partner is the first valid candidate in shuffled order.
Pairing pair_random(std::span<const Episode> episodes, std::uint64_t seed);

enum class PairingStrategy { Prior, Random };
PairingStrategy parse_pairing_strategy(const std::string& text);
const char* to_string(PairingStrategy s);
Pairing pair_episodes(std::span<const Episode> episodes, PairingStrategy strategy, std::uint64_t seed);

struct PeerAssignment {
  std::vector<Episode> peers;
  /// How many of the requested peers could not be supplied.
  std::size_t shortfall = 0;
};

/// The n_peers pool episodes overlapping `primary` the most (ties by episode
/// id), skipping episodes with the same path or the same start.
PeerAssignment assign_peers(const Episode& primary, std::span<const Episode> pool, int n_peers);

struct PairingStats {
  double mean_overlap = 0.0;  ///< over cross pairs; 0 when there are none
  std::size_t cross_pairs = 0;
  std::size_t self_pairs = 0;
};

/// Throws InvalidInput on an empty pairing.
PairingStats pairing_stats(const Pairing& pairs);

// --- persistence: one JSON object per line --------------------------------

std::vector<Episode> episodes_from_jsonl(const std::string& text);
std::string episodes_to_jsonl(std::span<const Episode> episodes);
std::vector<Episode> load_episodes(const std::filesystem::path& path);
void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path);

std::string pairing_to_json(const Pairing& pairs, PairingStrategy strategy, std::uint64_t seed);

}  // namespace covln
