#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "covln/env.hpp"
#include "covln/memory.hpp"

namespace covln {

/// Synthetic node embeddings. Each viewpoint has a fixed base vector: its
/// position scaled into the first three coordinates, then seeded standard
/// normal coordinates. Every observer sees the base plus its own Gaussian
/// noise of scale `noise_sigma`; the noise draw for a given (observer,
/// viewpoint) is fixed by the seed, so changing sigma rescales the same
/// perturbation.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::map<ViewpointId, Embedding> base, double noise_sigma, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  double noise_sigma() const { return sigma_; }
  bool contains(const ViewpointId& id) const { return base_.contains(id); }
  const Embedding& base(const ViewpointId& id) const;

  /// The embedding that `observer` perceives at viewpoint `id`.
  Embedding at(std::uint64_t observer, const ViewpointId& id) const;

 private:
  std::map<ViewpointId, Embedding> base_;
  std::size_t dim_ = 0;
  double sigma_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Throws InvalidInput if dim < 3 or noise_sigma < 0.
EmbeddingTable make_embeddings(const EnvGraph& env, std::size_t dim, double noise_sigma, std::uint64_t seed);

/// 64-bit FNV-1a; a portable string hash for seeding.
std::uint64_t stable_hash(const std::string& s);

}  // namespace covln
