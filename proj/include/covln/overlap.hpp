#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "covln/memory.hpp"

namespace covln {

enum class MatchMode { Id, Coord, Embed };

const char* to_string(MatchMode m);

/// A correspondence between node_a (in the first memory passed to detect)
/// and node_b (in the second).
struct MatchCandidate {
  NodeKey node_a;
  NodeKey node_b;
  double confidence = 1.0;
  double est_distance = 0.0;
  MatchMode mode = MatchMode::Id;

  friend bool operator==(const MatchCandidate&, const MatchCandidate&) = default;
};

using MatchSet = std::vector<MatchCandidate>;

/// Pair scorer f(e_a, e_b) -> [0,1]. Must be symmetric for detect() to be.
using PairScorer = std::function<double(std::span<const double>, std::span<const double>)>;

/// (cos(e_a, e_b) + 1) / 2. Throws InvalidInput on a zero vector or a
/// dimension mismatch.
double score_cosine(std::span<const double> a, std::span<const double> b);

/// (1 - c) * alpha. Throws InvalidInput for c outside [0,1] or alpha <= 0.
double est_distance(double confidence, double alpha);

struct MatcherConfig {
  MatchMode mode = MatchMode::Id;
  double tau = 0.9;
  double alpha = 2.0;
  double eps = 0.5;
  PairScorer scorer = score_cosine;
};

/// Throws InvalidInput when a field is out of its documented range.
void validate(const MatcherConfig& cfg);

/// Parses `id`, `coord:EPS` or `embed:TAU,ALPHA`.
MatcherConfig parse_matcher(const std::string& text);
std::string describe(const MatcherConfig& cfg);

/// Finds one-to-one correspondences between the self-provenance nodes of two
/// memories belonging to different agents.
///
///  - Id:    identical viewpoint ids, c = 1, d = 0.
///  - Coord: positions strictly closer than eps, greedy nearest-first.
///  - Embed: scorer output c >= tau, greedy by descending c, d = (1-c)*alpha.
///
/// Ties are broken by the (lower-agent key, higher-agent key) pair so that
/// swapping the arguments yields the same set with roles swapped. The result
/// is sorted by that same key pair.
MatchSet detect(const MemoryGraph& m_i, const MemoryGraph& m_j, const MatcherConfig& cfg);

/// Same matches seen from the other side (node_a <-> node_b).
MatchSet swapped(const MatchSet& matches);

}  // namespace covln
