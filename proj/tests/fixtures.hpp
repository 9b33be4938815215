#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covln/env.hpp"
#include "covln/memory.hpp"
#include "covln/overlap.hpp"
#include "covln/pairing.hpp"
#include "covln/rng.hpp"

namespace fixture {

covln::EnvGraph grid(int rows, int cols, double spacing = 1.0, const std::string& scan = "grid");

/// Handcrafted 5-node weighted graph with two equal-length routes a -> e.
covln::EnvGraph five_node();

/// Start "s" with four short decoy arms (a, b, c, d) and a long corridor
/// zc1..zc4 to the goal "zg". A lone frontier explorer spends its budget on
/// the arms; the goal room is only found quickly with outside knowledge.
covln::EnvGraph decoy_corridor();

/// Two random-geometric components ("L*" and "R*", 100 m apart) under one scan id.
covln::EnvGraph twin_islands(std::uint64_t seed, int n_per_side = 30);

covln::Episode episode(const std::string& id, const std::string& scan, std::vector<std::string> path);

/// Random corpus over a small viewpoint alphabet so that equal paths, equal
/// starts, singleton scans and overlap ties are all common.
std::vector<covln::Episode> random_corpus(covln::Rng& rng, int max_episodes, int max_scans = 3);

struct FusionCase {
  covln::MemoryGraph m_i;
  covln::MemoryGraph m_j;
  covln::MatchSet matches;
  double alpha = 2.0;
};

/// Random memories of up to 12 nodes (agents 0 and 1, with content relayed
/// from agents 2 and 3 and echoes of agent 0 on the peer side), plus random
/// one-to-one matches between self nodes.
FusionCase random_fusion_case(covln::Rng& rng, covln::MatchMode mode);

}  // namespace fixture
