#include "covln/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "covln/csv.hpp"
#include "covln/rng.hpp"

namespace covln {

const char* to_string(GroupingMode m) {
  switch (m) {
    case GroupingMode::Auto: return "auto";
    case GroupingMode::Pairs: return "pairs";
    case GroupingMode::Peers: return "peers";
  }
  return "auto";
}

GroupingMode parse_grouping(const std::string& text) {
  if (text == "auto") return GroupingMode::Auto;
  if (text == "pairs") return GroupingMode::Pairs;
  if (text == "peers") return GroupingMode::Peers;
  throw InvalidInput("grouping must be auto|pairs|peers, got '" + text + "'");
}

namespace {

const EnvGraph& env_for(const ExperimentConfig& cfg, const std::string& scan) {
  for (const auto& env : cfg.envs) {
    if (env.scan_id() == scan) return env;
  }
  throw InvalidInput("no environment loaded for scan '" + scan + "'");
}

GroupingMode effective_grouping(const ExperimentConfig& cfg) {
  if (cfg.grouping != GroupingMode::Auto) return cfg.grouping;
  return cfg.agents == 2 ? GroupingMode::Pairs : GroupingMode::Peers;
}

int budget_for(const ExperimentConfig& cfg, const Episode& ep) {
  return cfg.budget_factor * static_cast<int>(ep.gt_path.size()) + cfg.budget_slack;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.agents < 1) throw InvalidInput("agent count must be at least 1");
  if (cfg.episodes.empty()) throw InvalidInput("experiment has no episodes");
  if (cfg.budget_factor < 0 || cfg.budget_slack < 0 || cfg.budget_factor + cfg.budget_slack < 1) {
    throw InvalidInput("budget rule must give at least one step");
  }
  if (!(cfg.thresh >= 0.0)) throw InvalidInput("success threshold must be non-negative");
  if (!(cfg.alias_eps >= 0.0)) throw InvalidInput("alias radius must be non-negative");
  if (cfg.jobs < 1) throw InvalidInput("jobs must be at least 1");
  if (cfg.grouping == GroupingMode::Pairs && cfg.agents != 2) {
    throw InvalidInput("pair grouping needs exactly 2 agents");
  }
  validate(cfg.matcher);
  if (cfg.matcher.mode == MatchMode::Embed && cfg.embed_dim < 3) {
    throw InvalidInput("embedding dimension must be at least 3");
  }
  if (!(cfg.embed_noise >= 0.0)) throw InvalidInput("embedding noise must be non-negative");
  std::set<std::string> scans;
  for (const auto& env : cfg.envs) {
    if (!scans.insert(env.scan_id()).second) throw InvalidInput("duplicate environment for scan '" + env.scan_id() + "'");
  }
  std::set<std::string> ids;
  for (const auto& ep : cfg.episodes) {
    if (!ids.insert(ep.episode_id).second) throw InvalidInput("duplicate episode id '" + ep.episode_id + "'");
    validate_episode(ep, env_for(cfg, ep.scan_id));
  }
}

std::vector<GroupPlan> plan_groups(const ExperimentConfig& cfg) {
  std::vector<GroupPlan> plans;
  if (cfg.agents == 1) {
    for (const auto& ep : cfg.episodes) {
      GroupPlan p;
      p.group = {static_cast<int>(plans.size()), {ep}, {false}};
      p.scored = 1;
      plans.push_back(std::move(p));
    }
    return plans;
  }
  if (effective_grouping(cfg) == GroupingMode::Pairs) {
    const auto pairs = pair_episodes(cfg.episodes, cfg.pairing, cfg.seed);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      GroupPlan p;
      p.group.group_id = static_cast<int>(k);
      if (pairs.is_self_pair(k)) {
        p.group.members = {pairs.first[k]};
        p.group.self_paired = {true};
      } else {
        p.group.members = {pairs.first[k], pairs.second[k]};
        p.group.self_paired = {false, false};
      }
      p.scored = p.group.members.size();
      plans.push_back(std::move(p));
    }
    return plans;
  }
  std::map<std::string, std::vector<Episode>> by_scan;
  for (const auto& ep : cfg.episodes) by_scan[ep.scan_id].push_back(ep);
  for (const auto& ep : cfg.episodes) {
    auto assigned = assign_peers(ep, by_scan.at(ep.scan_id), cfg.agents - 1);
    GroupPlan p;
    p.group.group_id = static_cast<int>(plans.size());
    p.group.members.push_back(ep);
    for (auto& peer : assigned.peers) p.group.members.push_back(std::move(peer));
    p.group.self_paired.assign(p.group.members.size(), false);
    p.scored = 1;
    plans.push_back(std::move(p));
  }
  return plans;
}

RunRecord run_group(const EnvGraph& env, const GroupPlan& plan, const ExperimentConfig& cfg,
                    const EmbeddingTable* embeddings) {
  const auto& members = plan.group.members;
  if (members.empty()) throw InvalidInput("group " + std::to_string(plan.group.group_id) + " is empty");
  for (const auto& ep : members) validate_episode(ep, env);

  const std::uint64_t group_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(plan.group.group_id));
  SimConfig sim;
  sim.sharing = cfg.sharing && members.size() > 1;
  sim.matcher = cfg.matcher;
  sim.fusion = cfg.fusion;
  sim.topology = cfg.topology;
  sim.alias_eps = cfg.alias_eps;
  sim.embeddings = embeddings;

  std::vector<AgentTask> tasks;
  for (std::size_t k = 0; k < members.size(); ++k) {
    tasks.push_back({members[k].start(), members[k].goal(), budget_for(cfg, members[k])});
    sim.observers.push_back(mix_seed(group_seed, k));
  }

  // Without sharing every member is simulated alone, so the outcome cannot
  // depend on who else is in the group.
  std::vector<AgentOutcome> outcomes;
  GroupRecord rec;
  rec.group_id = plan.group.group_id;
  rec.scan_id = env.scan_id();
  rec.self_paired = std::any_of(plan.group.self_paired.begin(), plan.group.self_paired.end(), [](bool b) { return b; });
  for (const auto& ep : members) rec.members.push_back(ep.episode_id);
  if (sim.sharing) {
    auto out = simulate(env, tasks, sim);
    rec.overlap_detected = out.overlap_detected;
    rec.first_fusion_step = out.first_fusion_step;
    outcomes = std::move(out.agents);
    if (cfg.keep_memories) rec.memories = std::move(out.memories);
  } else {
    for (std::size_t k = 0; k < plan.scored; ++k) {
      SimConfig solo = sim;
      solo.observers = {sim.observers[k]};
      auto out = simulate(env, std::span(&tasks[k], 1), solo);
      outcomes.push_back(std::move(out.agents.front()));
      if (cfg.keep_memories) rec.memories.push_back(std::move(out.memories.front()));
    }
  }

  RunRecord run;
  const auto bucket = scene_area(env).bucket;
  for (std::size_t k = 0; k < plan.scored; ++k) {
    const auto& ep = members[k];
    const auto& o = outcomes[k];
    RunRow row;
    row.result = evaluate(o.trajectory, o.traveled, ep.goal(), path_length(env, ep.gt_path), env, cfg.thresh);
    row.result.episode_id = ep.episode_id;
    row.result.steps = o.steps;
    row.result.sharing_events = o.sharing_events;
    row.scan_id = env.scan_id();
    row.bucket = bucket;
    row.group_id = plan.group.group_id;
    run.rows.push_back(std::move(row));
  }
  run.groups.push_back(std::move(rec));
  return run;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto plans = plan_groups(cfg);

  std::map<std::string, EmbeddingTable> tables;
  if (cfg.sharing && cfg.matcher.mode == MatchMode::Embed) {
    for (const auto& env : cfg.envs) {
      tables.emplace(env.scan_id(),
                     make_embeddings(env, cfg.embed_dim, cfg.embed_noise, mix_seed(cfg.seed, stable_hash(env.scan_id()))));
    }
  }

  std::vector<RunRecord> parts(plans.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < plans.size(); k = next++) {
      try {
        const auto& scan = plans[k].group.members.front().scan_id;
        const auto it = tables.find(scan);
        parts[k] = run_group(env_for(cfg, scan), plans[k], cfg, it == tables.end() ? nullptr : &it->second);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), plans.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RunRecord run;
  for (auto& part : parts) {
    for (auto& row : part.rows) run.rows.push_back(std::move(row));
    for (auto& g : part.groups) run.groups.push_back(std::move(g));
  }
  std::sort(run.rows.begin(), run.rows.end(),
            [](const RunRow& a, const RunRow& b) { return a.result.episode_id < b.result.episode_id; });

  double overlap_total = 0.0;
  std::size_t overlap_pairs = 0;
  for (const auto& plan : plans) {
    const auto& m = plan.group.members;
    if (m.size() == 1 && plan.group.self_paired.front()) ++run.self_pairs;
    for (std::size_t k = 1; k < m.size(); ++k) {
      overlap_total += static_cast<double>(overlap_count(m.front().gt_path, m[k].gt_path));
      ++overlap_pairs;
    }
  }
  run.mean_overlap = overlap_pairs ? overlap_total / static_cast<double>(overlap_pairs) : 0.0;
  return run;
}

// --- output ---------------------------------------------------------------

std::string results_csv(const RunRecord& run, const ExperimentConfig& cfg) {
  std::string out = csv::row({"episode_id", "scan_id", "agents", "pairing", "fusion", "matcher", "tl", "ne", "osr",
                              "sr", "spl", "steps", "sharing_events", "seed"});
  const auto fusion = describe(cfg.fusion);
  const auto matcher = describe(cfg.matcher);
  for (const auto& row : run.rows) {
    const auto& r = row.result;
    out += csv::row({r.episode_id, row.scan_id, std::to_string(cfg.agents), to_string(cfg.pairing), fusion, matcher,
                     csv::fixed(r.tl), csv::fixed(r.ne), r.osr ? "1" : "0", r.sr ? "1" : "0", csv::fixed(r.spl),
                     std::to_string(r.steps), std::to_string(r.sharing_events), std::to_string(cfg.seed)});
  }
  return out;
}

std::string results_json(const RunRecord& run, const ExperimentConfig& cfg) {
  using json = nlohmann::json;
  json doc;
  doc["config"] = {{"agents", cfg.agents},
                   {"grouping", to_string(cfg.grouping)},
                   {"pairing", to_string(cfg.pairing)},
                   {"fusion", describe(cfg.fusion)},
                   {"matcher", describe(cfg.matcher)},
                   {"sharing", cfg.sharing},
                   {"topology", to_string(cfg.topology)},
                   {"seed", cfg.seed}};
  json rows = json::array();
  for (const auto& row : run.rows) {
    const auto& r = row.result;
    rows.push_back({{"episode_id", r.episode_id},
                    {"scan_id", row.scan_id},
                    {"group_id", row.group_id},
                    {"area_bucket", to_string(row.bucket)},
                    {"tl", r.tl},
                    {"ne", r.ne},
                    {"osr", r.osr},
                    {"sr", r.sr},
                    {"spl", r.spl},
                    {"steps", r.steps},
                    {"sharing_events", r.sharing_events}});
  }
  doc["rows"] = std::move(rows);
  json groups = json::array();
  for (const auto& g : run.groups) {
    json j{{"group_id", g.group_id},
           {"scan_id", g.scan_id},
           {"members", g.members},
           {"self_paired", g.self_paired},
           {"overlap_detected", g.overlap_detected}};
    j["first_fusion_step"] = g.first_fusion_step ? json(*g.first_fusion_step) : json(nullptr);
    groups.push_back(std::move(j));
  }
  doc["groups"] = std::move(groups);
  doc["mean_overlap"] = run.mean_overlap;
  doc["self_pairs"] = run.self_pairs;
  return doc.dump(1) + "\n";
}

std::vector<SummaryRow> summarize(const RunRecord& run, const ExperimentConfig& cfg, const std::string& point) {
  SummaryRow base;
  base.point = point;
  base.agents = cfg.agents;
  base.pairing = to_string(cfg.pairing);
  base.fusion = describe(cfg.fusion);
  base.matcher = describe(cfg.matcher);
  base.sharing = cfg.sharing;
  base.mean_overlap = run.mean_overlap;
  base.self_pairs = run.self_pairs;
  base.seed = cfg.seed;

  std::vector<SummaryRow> out;
  auto add = [&](const std::string& bucket, const std::vector<EpisodeResult>& results) {
    if (results.empty()) return;
    SummaryRow row = base;
    row.bucket = bucket;
    row.summary = aggregate(results);
    out.push_back(std::move(row));
  };
  std::vector<EpisodeResult> all;
  std::map<AreaBucket, std::vector<EpisodeResult>> by_bucket;
  for (const auto& row : run.rows) {
    all.push_back(row.result);
    by_bucket[row.bucket].push_back(row.result);
  }
  add("all", all);
  for (const auto b : {AreaBucket::Small, AreaBucket::Medium, AreaBucket::Large}) add(to_string(b), by_bucket[b]);
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out = csv::row({"point", "agents", "pairing", "fusion", "matcher", "sharing", "bucket", "episodes", "tl",
                              "ne", "osr", "sr", "spl", "mean_overlap", "self_pairs", "seed"});
  for (const auto& r : rows) {
    out += csv::row({r.point, std::to_string(r.agents), r.pairing, r.fusion, r.matcher, r.sharing ? "on" : "off",
                     r.bucket, std::to_string(r.summary.episodes), csv::fixed(r.summary.tl), csv::fixed(r.summary.ne),
                     csv::fixed(r.summary.osr), csv::fixed(r.summary.sr), csv::fixed(r.summary.spl),
                     csv::fixed(r.mean_overlap), std::to_string(r.self_pairs), std::to_string(r.seed)});
  }
  return out;
}

// --- sweeps ---------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("bad integer '" + text + "' in " + what);
  }
}

std::vector<std::string> fusion_grid() {
  std::vector<std::string> out;
  for (const char* trig : {"detect", "covisit"}) {
    for (const char* dir : {"bi", "later"}) {
      for (const char* persist : {"on", "off"}) {
        out.push_back(std::string("trigger=") + trig + ",dir=" + dir + ",persist=" + persist);
      }
    }
  }
  return out;
}

}  // namespace

SweepAxis parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InvalidInput("sweep '" + text + "' is not key=values");
  SweepAxis axis{text.substr(0, eq), {}};
  const auto rhs = text.substr(eq + 1);
  if (axis.key == "agents") {
    if (const auto dots = rhs.find(".."); dots != std::string::npos) {
      const int lo = parse_int(rhs.substr(0, dots), "agents sweep");
      const int hi = parse_int(rhs.substr(dots + 2), "agents sweep");
      if (lo < 1 || hi < lo) throw InvalidInput("agents sweep range must satisfy 1 <= A <= B");
      for (int n = lo; n <= hi; ++n) axis.values.push_back(std::to_string(n));
    } else {
      for (const auto& v : split(rhs, ',')) {
        if (parse_int(v, "agents sweep") < 1) throw InvalidInput("agent count must be at least 1");
        axis.values.push_back(v);
      }
    }
  } else if (axis.key == "pairing") {
    for (const auto& v : split(rhs, ',')) axis.values.push_back(to_string(parse_pairing_strategy(v)));
  } else if (axis.key == "fusion") {
    if (rhs == "grid") {
      axis.values = fusion_grid();
    } else {
      for (const auto& v : split(rhs, ';')) axis.values.push_back(describe(parse_fusion(v)));
    }
  } else if (axis.key == "sharing") {
    for (const auto& v : split(rhs, ',')) {
      if (v != "on" && v != "off") throw InvalidInput("sharing sweep values must be on|off, got '" + v + "'");
      axis.values.push_back(v);
    }
  } else {
    throw InvalidInput("unknown sweep key '" + axis.key + "' (expected agents|pairing|fusion|sharing)");
  }
  if (axis.values.empty()) throw InvalidInput("sweep '" + text + "' has no values");
  return axis;
}

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base, std::span<const SweepAxis> axes) {
  std::vector<SweepPoint> points{{"", base}};
  for (const auto& axis : axes) {
    std::vector<SweepPoint> next;
    for (const auto& p : points) {
      for (const auto& v : axis.values) {
        SweepPoint q = p;
        q.label += (q.label.empty() ? "" : ";") + axis.key + "=" + v;
        auto& c = q.config;
        if (axis.key == "agents") {
          c.agents = std::stoi(v);
          if (base.grouping == GroupingMode::Auto) c.grouping = GroupingMode::Peers;
        } else if (axis.key == "pairing") {
          c.pairing = parse_pairing_strategy(v);
        } else if (axis.key == "fusion") {
          c.fusion = parse_fusion(v);
        } else if (axis.key == "sharing") {
          c.sharing = v == "on";
        } else {
          throw InvalidInput("unknown sweep key '" + axis.key + "'");
        }
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  if (axes.empty()) points.front().label = "base";
  return points;
}

std::vector<SummaryRow> run_sweep(const ExperimentConfig& base, std::span<const SweepAxis> axes) {
  std::vector<SummaryRow> out;
  for (const auto& point : expand_sweep(base, axes)) {
    const auto run = run_experiment(point.config);
    for (auto& row : summarize(run, point.config, point.label)) out.push_back(std::move(row));
  }
  return out;
}

// --- synthetic corpora ----------------------------------------------------

std::vector<Episode> generate_episodes(const EnvGraph& env, int count, int min_edges, int max_edges,
                                       std::uint64_t seed) {
  if (count < 1) throw InvalidInput("episode count must be at least 1");
  if (min_edges < 1 || max_edges < min_edges) throw InvalidInput("path length range must satisfy 1 <= min <= max");
  if (env.empty()) throw InvalidInput("cannot generate episodes on an empty environment");

  std::vector<PathResult> candidates;
  std::size_t longest = 0;
  for (const auto& vp : env.viewpoints()) {
    for (auto& [target, pr] : shortest_paths_from(env, vp.id)) {
      const auto edges = pr.path.size() - 1;
      longest = std::max(longest, edges);
      if (edges >= static_cast<std::size_t>(min_edges) && edges <= static_cast<std::size_t>(max_edges)) {
        candidates.push_back(std::move(pr));
      }
    }
  }
  if (candidates.empty()) {
    throw InvalidInput("no shortest path with " + std::to_string(min_edges) + ".." + std::to_string(max_edges) +
                       " edges in scan '" + env.scan_id() + "'; the longest feasible path has " +
                       std::to_string(longest) + " edges");
  }

  Rng rng(mix_seed(seed, stable_hash(env.scan_id())));
  rng.shuffle(std::span<PathResult>(candidates));
  std::vector<Episode> out;
  for (int k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(k) < candidates.size() ? static_cast<std::size_t>(k)
                                                                      : rng.below(candidates.size());
    char id[32];
    std::snprintf(id, sizeof id, "-ep%05d", k);
    Episode ep;
    ep.episode_id = env.scan_id() + id;
    ep.scan_id = env.scan_id();
    ep.gt_path = candidates[idx].path;
    ep.instruction = "Go to viewpoint " + ep.goal() + ".";
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace covln
