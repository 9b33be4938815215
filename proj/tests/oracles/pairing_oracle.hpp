#pragma once

// Line-by-line reference of the prior-based pairing procedure, kept free of
// the library's helpers except for the shared shuffle.

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "covln/pairing.hpp"
#include "covln/rng.hpp"

namespace oracle {

inline std::size_t shared_viewpoints(std::vector<std::string> p, std::vector<std::string> q) {
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  std::vector<std::string> both;
  std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(both));
  return both.size();
}

struct IdPairs {
  std::vector<std::string> first;
  std::vector<std::string> second;
  bool operator==(const IdPairs&) const = default;
};

inline IdPairs reference_pair_prior(const std::vector<covln::Episode>& episodes, std::uint64_t seed) {
  IdPairs out;
  std::set<std::string> scans;
  for (const auto& e : episodes) scans.insert(e.scan_id);
  for (const auto& scan : scans) {
    std::vector<covln::Episode> d;
    for (const auto& e : episodes) {
      if (e.scan_id == scan) d.push_back(e);
    }
    covln::Rng rng(seed);
    rng.shuffle(std::span<covln::Episode>(d));
    while (!d.empty()) {
      const covln::Episode da = d.front();
      d.erase(d.begin());
      std::vector<std::size_t> cands;
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k].gt_path != da.gt_path && d[k].gt_path.front() != da.gt_path.front()) cands.push_back(k);
      }
      if (cands.empty()) {
        out.first.push_back(da.episode_id);
        out.second.push_back(da.episode_id);
        continue;
      }
      std::size_t best = cands.front();
      std::size_t best_ov = shared_viewpoints(da.gt_path, d[best].gt_path);
      for (const auto c : cands) {
        const auto ov = shared_viewpoints(da.gt_path, d[c].gt_path);
        if (ov > best_ov || (ov == best_ov && d[c].episode_id < d[best].episode_id)) {
          best = c;
          best_ov = ov;
        }
      }
      out.first.push_back(da.episode_id);
      out.second.push_back(d[best].episode_id);
      d.erase(d.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  return out;
}

inline IdPairs ids_of(const covln::Pairing& p) {
  IdPairs out;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.first.push_back(p.first[k].episode_id);
    out.second.push_back(p.second[k].episode_id);
  }
  return out;
}

/// Top-k by full sort of (overlap desc, id asc) over the eligible pool.
inline std::vector<std::string> reference_top_k(const covln::Episode& primary, const std::vector<covln::Episode>& pool,
                                                std::size_t k) {
  std::vector<std::tuple<long, std::string>> keyed;
  for (const auto& e : pool) {
    if (e.episode_id == primary.episode_id || e.gt_path == primary.gt_path ||
        e.gt_path.front() == primary.gt_path.front()) {
      continue;
    }
    keyed.emplace_back(-static_cast<long>(shared_viewpoints(primary.gt_path, e.gt_path)), e.episode_id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, keyed.size()); ++i) out.push_back(std::get<1>(keyed[i]));
  return out;
}

}  // namespace oracle
