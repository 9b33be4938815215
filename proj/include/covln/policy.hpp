#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covln/embedding.hpp"
#include "covln/env.hpp"
#include "covln/fusion.hpp"
#include "covln/memory.hpp"
#include "covln/overlap.hpp"
#include "covln/pairing.hpp"

namespace covln {

struct HistoryEntry {
  ViewpointId id;
  int step = 0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct AgentState {
  int agent_id = 0;
  ViewpointId current;
  std::vector<HistoryEntry> history;
  MemoryGraph memory;
  int steps_taken = 0;
  bool stopped = false;
  double traveled = 0.0;
};

struct Action {
  enum class Kind { MoveTo, Stop };
  Kind kind = Kind::Stop;
  NodeKey target;

  static Action stop() { return {}; }
  static Action move_to(NodeKey key) { return {Kind::MoveTo, std::move(key)}; }
  bool is_stop() const { return kind == Kind::Stop; }

  friend bool operator==(const Action&, const Action&) = default;
};

/// What an agent perceives about a viewpoint besides its id: the true
/// position always, and an embedding when a table is supplied.
struct Perception {
  const EmbeddingTable* embeddings = nullptr;
  std::uint64_t observer = 0;
};

/// Fresh agent standing at `start` with its first observation recorded at step 0.
AgentState start_agent(int agent_id, const EnvGraph& env, const ViewpointId& start, const Perception& sense);

/// Frontier-greedy navigator. Routes to the goal once any memory node carries
/// the goal's viewpoint id, otherwise to the nearest observed-but-unvisited
/// node; distances are shortest paths in the memory graph with bridge edges
/// traversable at their weight, ties broken by node key.
Action decide(const AgentState& state, const ViewpointId& goal, int budget);

/// Applies `action` against the true environment at step `t`.
///  - Over a memory edge the environment also has: move, pay the true weight,
///    observe. If the environment lacks the edge, the link is dropped from
///    memory and the step is spent in place.
///  - Over a bridge: a true alias (positions within alias_eps) is merged into
///    the current node at zero cost; a false match is pruned and the step is
///    spent in place.
/// Throws InvalidInput if the target is not adjacent to the current node in memory.
void execute(AgentState& state, const EnvGraph& env, const Action& action, double alias_eps,
             const Perception& sense, int t);

enum class ShareTopology { All, PrimaryOnly };

const char* to_string(ShareTopology t);
ShareTopology parse_share_topology(const std::string& text);

struct SimConfig {
  bool sharing = true;
  MatcherConfig matcher;
  FusionPolicy fusion;
  ShareTopology topology = ShareTopology::All;
  double alias_eps = 0.5;
  /// Required for embedding matching.
  const EmbeddingTable* embeddings = nullptr;
  /// Per-agent perception streams; agent k observes as observers[k] (k when empty).
  std::vector<std::uint64_t> observers;
  /// Called after every tick's fusion round (and after step 0).
  std::function<void(int, std::span<const AgentState>)> on_tick;
};

struct AgentTask {
  ViewpointId start;
  ViewpointId goal;
  int budget = 1;
};

struct AgentOutcome {
  std::vector<ViewpointId> trajectory;
  double traveled = 0.0;
  int steps = 0;
  int sharing_events = 0;

  const ViewpointId& final_position() const { return trajectory.back(); }
  friend bool operator==(const AgentOutcome&, const AgentOutcome&) = default;
};

struct GroupOutcome {
  std::vector<AgentOutcome> agents;
  bool overlap_detected = false;
  std::optional<int> first_fusion_step;
  int ticks = 0;
  std::vector<MemoryGraph> memories;
};

/// Lockstep simulation of one group. Step 0 records every agent's start view
/// and then runs one detection/fusion round; each later tick lets every active
/// agent (ascending id) decide and execute, then runs detection over the
/// agent pairs allowed by the topology and applies the fusion policy to
/// snapshots taken at the tick boundary. Ends when every agent has stopped.
/// With sharing off the agents never interact.
GroupOutcome simulate(const EnvGraph& env, std::span<const AgentTask> tasks, const SimConfig& cfg);

/// Default step budget: 2 * |gt_path| + 10.
int default_budget(std::size_t gt_path_nodes);

/// Runs `ep` as agent 0 alongside `peers` (agents 1..) and returns agent 0's
/// outcome. Peers use their default budgets. With cfg.sharing off the peers
/// are not simulated at all. Throws InvalidInput if an episode does not fit
/// the environment or budget < 1.
AgentOutcome run_episode(const EnvGraph& env, const Episode& ep, std::span<const Episode> peers,
                         const SimConfig& cfg, int budget);

}  // namespace covln
