#include "covln/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "covln/rng.hpp"

namespace covln {

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EmbeddingTable::EmbeddingTable(std::map<ViewpointId, Embedding> base, double noise_sigma, std::uint64_t seed)
    : base_(std::move(base)), sigma_(noise_sigma), seed_(seed) {
  if (!base_.empty()) dim_ = base_.begin()->second.size();
  for (const auto& [id, e] : base_) {
    if (e.size() != dim_) throw InvalidInput("embedding for '" + id + "' has inconsistent dimension");
  }
}

const Embedding& EmbeddingTable::base(const ViewpointId& id) const {
  const auto it = base_.find(id);
  if (it == base_.end()) throw InvalidInput("no embedding for viewpoint '" + id + "'");
  return it->second;
}

Embedding EmbeddingTable::at(std::uint64_t observer, const ViewpointId& id) const {
  Embedding e = base(id);
  if (sigma_ == 0.0) return e;
  Rng rng(mix_seed(mix_seed(seed_, observer), stable_hash(id)));
  for (double& x : e) x += sigma_ * rng.normal();
  return e;
}

EmbeddingTable make_embeddings(const EnvGraph& env, std::size_t dim, double noise_sigma, std::uint64_t seed) {
  if (dim < 3) throw InvalidInput("embedding dimension must be at least 3");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidInput("noise sigma must be >= 0");

  double scale = 0.0;
  for (const auto& vp : env.viewpoints()) {
    scale = std::max({scale, std::abs(vp.position.x), std::abs(vp.position.y), std::abs(vp.position.z)});
  }
  if (scale == 0.0) scale = 1.0;

  const std::uint64_t base_seed = mix_seed(seed, 0x62617365ULL);
  std::map<ViewpointId, Embedding> base;
  for (const auto& vp : env.viewpoints()) {
    Embedding e(dim);
    e[0] = vp.position.x / scale;
    e[1] = vp.position.y / scale;
    e[2] = vp.position.z / scale;
    Rng rng(mix_seed(base_seed, stable_hash(vp.id)));
    for (std::size_t k = 3; k < dim; ++k) e[k] = rng.normal();
    base.emplace(vp.id, std::move(e));
  }
  return EmbeddingTable(std::move(base), noise_sigma, mix_seed(seed, 0x6e6f697365ULL));
}

}  // namespace covln
