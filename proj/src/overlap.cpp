#include "covln/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

namespace covln {

const char* to_string(MatchMode m) {
  switch (m) {
    case MatchMode::Id: return "id";
    case MatchMode::Coord: return "coord";
    case MatchMode::Embed: return "embed";
  }
  return "?";
}

double score_cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidInput("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine score of a zero vector");
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

double est_distance(double confidence, double alpha) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw InvalidInput("confidence " + std::to_string(confidence) + " outside [0,1]");
  }
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  return (1.0 - confidence) * alpha;
}

void validate(const MatcherConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw InvalidInput("tau must lie in (0,1]");
  if (!(cfg.alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (!(cfg.eps > 0.0)) throw InvalidInput("eps must be positive");
  if (cfg.mode == MatchMode::Embed && !cfg.scorer) throw InvalidInput("embedding matcher needs a scorer");
}

namespace {

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InvalidInput("bad " + what + " '" + text + "' in matcher string");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

MatcherConfig parse_matcher(const std::string& text) {
  MatcherConfig cfg;
  if (text == "id") {
    cfg.mode = MatchMode::Id;
  } else if (text.rfind("coord:", 0) == 0) {
    cfg.mode = MatchMode::Coord;
    cfg.eps = parse_number(text.substr(6), "eps");
  } else if (text == "coord") {
    cfg.mode = MatchMode::Coord;
  } else if (text.rfind("embed:", 0) == 0) {
    cfg.mode = MatchMode::Embed;
    const auto args = text.substr(6);
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw InvalidInput("embed matcher expects embed:TAU,ALPHA");
    cfg.tau = parse_number(args.substr(0, comma), "tau");
    cfg.alpha = parse_number(args.substr(comma + 1), "alpha");
  } else if (text == "embed") {
    cfg.mode = MatchMode::Embed;
  } else {
    throw InvalidInput("unknown matcher '" + text + "' (expected id | coord:EPS | embed:TAU,ALPHA)");
  }
  validate(cfg);
  return cfg;
}

std::string describe(const MatcherConfig& cfg) {
  switch (cfg.mode) {
    case MatchMode::Id: return "id";
    case MatchMode::Coord: return "coord:" + format_number(cfg.eps);
    case MatchMode::Embed: return "embed:" + format_number(cfg.tau) + "," + format_number(cfg.alpha);
  }
  return "?";
}

namespace {

struct Scored {
  double score;  // ordering key: larger is better
  const std::string* lo;  // key in the lower-agent memory
  const std::string* hi;
  MatchCandidate match;
};

// Greedy one-to-one selection in descending score, ties by (lo, hi).
MatchSet assign_greedy(std::vector<Scored> cands) {
  std::sort(cands.begin(), cands.end(), [](const Scored& x, const Scored& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::tie(*x.lo, *x.hi) < std::tie(*y.lo, *y.hi);
  });
  std::set<std::string> used_a, used_b;
  std::vector<Scored> chosen;
  for (auto& c : cands) {
    if (used_a.contains(c.match.node_a) || used_b.contains(c.match.node_b)) continue;
    used_a.insert(c.match.node_a);
    used_b.insert(c.match.node_b);
    chosen.push_back(std::move(c));
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Scored& x, const Scored& y) { return std::tie(*x.lo, *x.hi) < std::tie(*y.lo, *y.hi); });
  MatchSet out;
  out.reserve(chosen.size());
  for (auto& c : chosen) out.push_back(std::move(c.match));
  return out;
}

std::vector<std::pair<const NodeKey*, const NodePayload*>> candidates(const MemoryGraph& m) {
  std::vector<std::pair<const NodeKey*, const NodePayload*>> out;
  for (const auto& [key, p] : m.nodes()) {
    if (p.provenance.is_self()) out.emplace_back(&key, &p);
  }
  return out;
}

}  // namespace

MatchSet detect(const MemoryGraph& m_i, const MemoryGraph& m_j, const MatcherConfig& cfg) {
  validate(cfg);
  if (m_i.agent_id() == m_j.agent_id()) {
    throw InvalidInput("overlap detection needs memories of two distinct agents (both are agent " +
                       std::to_string(m_i.agent_id()) + ")");
  }
  const bool i_is_lo = m_i.agent_id() < m_j.agent_id();
  const auto ci = candidates(m_i);
  const auto cj = candidates(m_j);

  auto make = [&](const NodeKey& a, const NodeKey& b, double score, double c, double d) {
    return Scored{score, i_is_lo ? &a : &b, i_is_lo ? &b : &a, MatchCandidate{a, b, c, d, cfg.mode}};
  };

  std::vector<Scored> scored;
  switch (cfg.mode) {
    case MatchMode::Id: {
      std::map<std::string_view, const NodeKey*> by_vid;
      for (const auto& [key, p] : cj) by_vid.emplace(p->viewpoint_id, key);
      for (const auto& [key, p] : ci) {
        if (const auto it = by_vid.find(p->viewpoint_id); it != by_vid.end()) {
          scored.push_back(make(*key, *it->second, 1.0, 1.0, 0.0));
        }
      }
      break;
    }
    case MatchMode::Coord: {
      auto need_position = [](const MemoryGraph& m, const NodeKey& key, const NodePayload& p) {
        if (!p.position) {
          throw InvalidInput("coordinate matching: node '" + key + "' of agent " + std::to_string(m.agent_id()) +
                             " has no position");
        }
      };
      for (const auto& [key, p] : ci) need_position(m_i, *key, *p);
      for (const auto& [key, p] : cj) need_position(m_j, *key, *p);
      for (const auto& [ka, pa] : ci) {
        for (const auto& [kb, pb] : cj) {
          const double dist = distance(*pa->position, *pb->position);
          if (dist < cfg.eps) scored.push_back(make(*ka, *kb, -dist, 1.0, 0.0));
        }
      }
      break;
    }
    case MatchMode::Embed: {
      auto need_embedding = [](const MemoryGraph& m, const NodeKey& key, const NodePayload& p) {
        if (!p.embedding) {
          throw InvalidInput("embedding matching: node '" + key + "' of agent " + std::to_string(m.agent_id()) +
                             " has no embedding");
        }
      };
      for (const auto& [key, p] : ci) need_embedding(m_i, *key, *p);
      for (const auto& [key, p] : cj) need_embedding(m_j, *key, *p);
      for (const auto& [ka, pa] : ci) {
        for (const auto& [kb, pb] : cj) {
          const double c = cfg.scorer(*pa->embedding, *pb->embedding);
          if (!(c >= 0.0 && c <= 1.0)) throw InvalidInput("scorer returned confidence outside [0,1]");
          if (c >= cfg.tau) scored.push_back(make(*ka, *kb, c, c, est_distance(c, cfg.alpha)));
        }
      }
      break;
    }
  }
  return assign_greedy(std::move(scored));
}

MatchSet swapped(const MatchSet& matches) {
  MatchSet out = matches;
  for (auto& m : out) std::swap(m.node_a, m.node_b);
  return out;
}

}  // namespace covln
