#include "covln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace covln {

EpisodeResult evaluate(std::span<const ViewpointId> trajectory, double traveled, const ViewpointId& goal,
                       double gt_len, const EnvGraph& env, double thresh) {
  if (trajectory.empty()) throw InvalidInput("cannot evaluate an empty trajectory");
  if (!(gt_len > 0.0)) throw InvalidInput("reference path length must be positive");
  if (!(traveled >= 0.0)) throw InvalidInput("traveled distance must be non-negative");
  const Vec3& g = env.position(goal);

  EpisodeResult r;
  r.tl = traveled;
  r.ne = distance(env.position(trajectory.back()), g);
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& id : trajectory) closest = std::min(closest, distance(env.position(id), g));
  r.sr = r.ne <= thresh;
  r.osr = closest <= thresh;
  r.spl = r.sr ? gt_len / std::max(gt_len, traveled) : 0.0;
  return r;
}

double path_length(const EnvGraph& env, std::span<const ViewpointId> path) {
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto w = env.edge_weight(path[k - 1], path[k]);
    if (!w) throw InvalidInput("path steps between non-adjacent viewpoints " + path[k - 1] + " and " + path[k]);
    total += *w;
  }
  return total;
}

Summary aggregate(std::span<const EpisodeResult> results) {
  if (results.empty()) throw InvalidInput("cannot aggregate an empty result set");
  Summary s;
  s.episodes = results.size();
  for (const auto& r : results) {
    s.tl += r.tl;
    s.ne += r.ne;
    s.osr += r.osr ? 1.0 : 0.0;
    s.sr += r.sr ? 1.0 : 0.0;
    s.spl += r.spl;
  }
  const auto n = static_cast<double>(results.size());
  s.tl /= n;
  s.ne /= n;
  s.osr = 100.0 * s.osr / n;
  s.sr = 100.0 * s.sr / n;
  s.spl /= n;
  return s;
}

}  // namespace covln
