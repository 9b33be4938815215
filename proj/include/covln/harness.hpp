#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covln/embedding.hpp"
#include "covln/env.hpp"
#include "covln/fusion.hpp"
#include "covln/metrics.hpp"
#include "covln/overlap.hpp"
#include "covln/pairing.hpp"
#include "covln/policy.hpp"

namespace covln {

/// How episodes are grouped for simulation.
///  - Pairs: the pairing strategy forms groups of two (self-pairs run solo).
///  - Peers: every episode is a primary task, joined by agents-1 helpers from
///    assign_peers; only the primary is scored.
///  - Auto: Pairs for two agents, Peers otherwise.
enum class GroupingMode { Auto, Pairs, Peers };

const char* to_string(GroupingMode m);
GroupingMode parse_grouping(const std::string& text);

/// Everything a run depends on. Sources (files or generators) are resolved by
/// the caller; the run is a pure function of this struct.
struct ExperimentConfig {
  std::vector<EnvGraph> envs;
  std::vector<Episode> episodes;
  int agents = 2;
  GroupingMode grouping = GroupingMode::Auto;
  PairingStrategy pairing = PairingStrategy::Prior;
  MatcherConfig matcher;
  FusionPolicy fusion;
  bool sharing = true;
  ShareTopology topology = ShareTopology::All;
  /// Step budget per episode: budget_factor * |gt_path| + budget_slack.
  int budget_factor = 2;
  int budget_slack = 10;
  double thresh = kDefaultSuccessThreshold;
  double alias_eps = 0.5;
  std::size_t embed_dim = 32;
  double embed_noise = 0.0;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Keep every agent's final memory in the group records.
  bool keep_memories = false;
};

/// Throws InvalidInput describing the first invalid field.
void validate(const ExperimentConfig& cfg);

/// One simulation unit. Only the first `scored` members produce result rows.
struct GroupPlan {
  EpisodeGroup group;
  std::size_t scored = 0;
};

struct RunRow {
  EpisodeResult result;
  std::string scan_id;
  AreaBucket bucket = AreaBucket::Small;
  int group_id = 0;
};

struct GroupRecord {
  int group_id = 0;
  std::string scan_id;
  std::vector<std::string> members;
  bool self_paired = false;
  bool overlap_detected = false;
  std::optional<int> first_fusion_step;
  std::vector<MemoryGraph> memories;  ///< only with keep_memories
};

struct RunRecord {
  std::vector<RunRow> rows;  ///< sorted by episode id, one per input episode
  std::vector<GroupRecord> groups;
  double mean_overlap = 0.0;
  std::size_t self_pairs = 0;
};

/// Groups the episodes according to cfg (deterministic under cfg.seed).
std::vector<GroupPlan> plan_groups(const ExperimentConfig& cfg);

/// Simulates one group and scores its members. `embeddings` may be null
/// unless the matcher needs it.
RunRecord run_group(const EnvGraph& env, const GroupPlan& plan, const ExperimentConfig& cfg,
                    const EmbeddingTable* embeddings);

/// Runs every group, on up to cfg.jobs threads; the result does not depend on jobs.
RunRecord run_experiment(const ExperimentConfig& cfg);

/// Per-episode CSV with the fixed column set (header included).
std::string results_csv(const RunRecord& run, const ExperimentConfig& cfg);
/// The same rows plus group metadata, as JSON.
std::string results_json(const RunRecord& run, const ExperimentConfig& cfg);

struct SummaryRow {
  std::string point;
  int agents = 0;
  std::string pairing;
  std::string fusion;
  std::string matcher;
  bool sharing = false;
  std::string bucket;  ///< "all" or an area bucket
  Summary summary;
  double mean_overlap = 0.0;
  std::size_t self_pairs = 0;
  std::uint64_t seed = 0;
};

/// Overall row followed by one row per non-empty area bucket.
std::vector<SummaryRow> summarize(const RunRecord& run, const ExperimentConfig& cfg, const std::string& point);
std::string summary_csv(std::span<const SummaryRow> rows);

// --- sweeps ---------------------------------------------------------------

/// One swept key: agents=A..B (or a list), pairing=prior,random,
/// fusion=grid (all 8 switch combinations, or a list of presets separated by
/// ';'), sharing=off,on. Unknown keys throw InvalidInput.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

SweepAxis parse_sweep(const std::string& text);

struct SweepPoint {
  std::string label;
  ExperimentConfig config;
};

/// Cartesian product of the axes, first axis outermost. Sweeping agents
/// selects Peers grouping unless the base config fixes one.
std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base, std::span<const SweepAxis> axes);

std::vector<SummaryRow> run_sweep(const ExperimentConfig& base, std::span<const SweepAxis> axes);

// --- synthetic corpora ----------------------------------------------------

/// `count` episodes whose ground-truth path is a shortest path with between
/// min_edges and max_edges edges, drawn uniformly from all such (start, goal)
/// pairs (without replacement while possible). Throws InvalidInput when no
/// pair qualifies, naming the longest feasible path.
std::vector<Episode> generate_episodes(const EnvGraph& env, int count, int min_edges, int max_edges,
                                       std::uint64_t seed);

}  // namespace covln
