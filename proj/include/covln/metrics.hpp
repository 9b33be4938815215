#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covln/env.hpp"

namespace covln {

inline constexpr double kDefaultSuccessThreshold = 3.0;

struct EpisodeResult {
  std::string episode_id;
  double tl = 0.0;
  double ne = 0.0;
  bool osr = false;
  bool sr = false;
  double spl = 0.0;
  int steps = 0;
  int sharing_events = 0;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

/// Scores one finished trajectory. `traveled` is the physical length walked,
/// `gt_len` the length of the reference path.
///   ne  = |final - goal|,  sr = ne <= thresh,
///   osr = some visited viewpoint lies within thresh of the goal,
///   spl = sr * gt_len / max(gt_len, traveled).
/// steps and sharing_events are left at zero for the caller to fill.
/// Throws InvalidInput on an empty trajectory, unknown ids or gt_len <= 0.
EpisodeResult evaluate(std::span<const ViewpointId> trajectory, double traveled, const ViewpointId& goal,
                       double gt_len, const EnvGraph& env, double thresh = kDefaultSuccessThreshold);

/// Sum of edge weights along `path`; throws InvalidInput on a missing edge.
double path_length(const EnvGraph& env, std::span<const ViewpointId> path);

/// Means over episodes. SR and OSR are percentages, SPL stays a fraction.
struct Summary {
  std::size_t episodes = 0;
  double tl = 0.0;
  double ne = 0.0;
  double osr = 0.0;
  double sr = 0.0;
  double spl = 0.0;
};

/// Throws InvalidInput on an empty set.
Summary aggregate(std::span<const EpisodeResult> results);

}  // namespace covln
