#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covln/memory.hpp"
#include "covln/overlap.hpp"

namespace covln {

enum class FusionTrigger { OnDetection, OnCoVisit };
enum class FusionDirection { Bidirectional, ToLaterAgent };

/// The three switches of the fusion ablation. Defaults are the strongest
/// configuration: fuse on detection, both ways, every tick.
struct FusionPolicy {
  FusionTrigger trigger = FusionTrigger::OnDetection;
  FusionDirection direction = FusionDirection::Bidirectional;
  bool persistent = true;

  friend bool operator==(const FusionPolicy&, const FusionPolicy&) = default;
};

/// Parses `trigger=detect|covisit,dir=bi|later,persist=on|off`; omitted keys
/// keep their defaults.
FusionPolicy parse_fusion(const std::string& text);
std::string describe(const FusionPolicy& p);

/// Enriched graph of m_i after absorbing a frozen snapshot of a peer memory:
/// peer nodes without a match are imported (provenance Peer), peer edges
/// follow their endpoints, id/coordinate anchors collapse into m_i's node and
/// embedding anchors stay distinct behind a bridge edge of weight d. Content
/// already present in m_i is never modified, so repeated fusion is idempotent.
/// Throws InvalidInput if a match names a node missing from either memory.
MemoryGraph fuse(const MemoryGraph& m_i, const MemoryGraph& m_j_snapshot, const MatchSet& matches);

/// In-place form of fuse().
void fuse_into(MemoryGraph& m_i, const MemoryGraph& m_j_snapshot, const MatchSet& matches);

/// Matches for one agent pair (i < j), oriented so node_a lives in agent i.
struct PairMatches {
  int i = 0;
  int j = 0;
  MatchSet matches;
};

struct FusionEvent {
  int step = 0;
  int agent_i = 0;
  int agent_j = 0;
  MatchSet matches;
  std::vector<int> applied_to;
};

/// Per-group bookkeeping for one-shot (non-persistent) fusion.
class FusionState {
 public:
  bool has_fired(int i, int j) const { return fired_.contains({i, j}); }
  void mark_fired(int i, int j) { fired_.insert({i, j}); }

 private:
  std::set<std::pair<int, int>> fired_;
};

/// Decides which fusions fire this tick. `snapshots[k]` is agent k's memory
/// frozen at the tick boundary; `pairs` must be in ascending (i, j) order.
std::vector<FusionEvent> maybe_fuse(FusionState& state, std::span<const MemoryGraph> snapshots,
                                    const FusionPolicy& policy, std::span<const PairMatches> pairs, int t);

/// Applies events in order; each target absorbs the other agent's snapshot.
void apply_events(std::span<MemoryGraph> live, std::span<const MemoryGraph> snapshots,
                  std::span<const FusionEvent> events);

}  // namespace covln
