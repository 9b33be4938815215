#include "covln/policy.hpp"

#include <algorithm>
#include <map>

#include "graph_search.hpp"

namespace covln {

namespace {

void observe(AgentState& s, const EnvGraph& env, const Perception& sense, int t) {
  std::vector<Observation> seen;
  for (const auto& [id, w] : env.neighbors(s.current)) {
    Observation obs{id, w, std::nullopt, env.position(id)};
    if (sense.embeddings) obs.embedding = sense.embeddings->at(sense.observer, id);
    seen.push_back(std::move(obs));
  }
  s.memory.record_visit(s.current, seen, t);
}

}  // namespace

AgentState start_agent(int agent_id, const EnvGraph& env, const ViewpointId& start, const Perception& sense) {
  if (!env.contains(start)) throw InvalidInput("start viewpoint '" + start + "' is not in the environment");
  AgentState s;
  s.agent_id = agent_id;
  s.current = start;
  s.history.push_back({start, 0});
  std::optional<Embedding> own;
  if (sense.embeddings) own = sense.embeddings->at(sense.observer, start);
  s.memory = new_memory(agent_id, start, std::move(own), env.position(start));
  observe(s, env, sense, 0);
  return s;
}

Action decide(const AgentState& s, const ViewpointId& goal, int budget) {
  if (s.stopped || s.current == goal || s.steps_taken >= budget) return Action::stop();

  const auto& m = s.memory;
  detail::SearchGraph g;
  std::map<std::string_view, int> index;
  for (const auto& [key, p] : m.nodes()) index.emplace(key, g.add_node(key));
  for (const auto& [k, e] : m.edges()) g.add_edge(index.at(k.a), index.at(k.b), e.weight);
  for (const auto& [k, w] : m.bridges()) g.add_edge(index.at(k.a), index.at(k.b), w);

  const auto src = index.find(s.current);
  if (src == index.end()) throw InvalidInput("agent's current viewpoint is missing from its memory");
  const auto tree = detail::lex_dijkstra(g, src->second);

  // Nearest reached node satisfying `want`; node order is key order, so the
  // first of several equidistant candidates has the smallest key.
  auto nearest = [&](auto want) -> std::optional<int> {
    std::optional<int> best;
    int v = 0;
    for (const auto& [key, p] : m.nodes()) {
      if (v != src->second && tree.reached(v) && want(p) &&
          (!best || tree.dist[v] < tree.dist[*best] - detail::kTieEps)) {
        best = v;
      }
      ++v;
    }
    return best;
  };

  auto target = nearest([&](const NodePayload& p) { return p.viewpoint_id == goal; });
  if (!target) target = nearest([](const NodePayload& p) { return p.status == NodeStatus::Observed; });
  if (!target) return Action::stop();
  const auto path = tree.path_to(*target);
  return Action::move_to(std::string(g.keys[path[1]]));
}

void execute(AgentState& s, const EnvGraph& env, const Action& action, double alias_eps, const Perception& sense,
             int t) {
  if (s.stopped) return;
  if (action.is_stop()) {
    s.stopped = true;
    return;
  }
  auto& m = s.memory;
  const NodeKey& target = action.target;
  const auto link = EdgeKey::of(s.current, target);
  const bool by_edge = m.edges().contains(link);
  if (!by_edge && !m.bridges().contains(link)) {
    throw InvalidInput("agent " + std::to_string(s.agent_id) + " cannot move from '" + s.current + "' to '" + target +
                       "': not adjacent in memory");
  }
  const ViewpointId vid = m.node(target).viewpoint_id;
  ++s.steps_taken;

  if (by_edge) {
    const auto w = env.edge_weight(s.current, vid);
    if (!w) {
      m.reject_link(s.current, target);
      return;
    }
    if (target != vid) m.fold_node(target, vid);
    s.current = vid;
    s.traveled += *w;
    s.history.push_back({vid, t});
    observe(s, env, sense, t);
    return;
  }

  if (distance(env.position(s.current), env.position(vid)) <= alias_eps) {
    m.fold_node(target, s.current);
  } else {
    m.reject_link(s.current, target);
  }
}

const char* to_string(ShareTopology t) { return t == ShareTopology::All ? "all" : "primary-only"; }

ShareTopology parse_share_topology(const std::string& text) {
  if (text == "all") return ShareTopology::All;
  if (text == "primary-only") return ShareTopology::PrimaryOnly;
  throw InvalidInput("share topology must be all|primary-only, got '" + text + "'");
}

int default_budget(std::size_t gt_path_nodes) { return static_cast<int>(2 * gt_path_nodes + 10); }

GroupOutcome simulate(const EnvGraph& env, std::span<const AgentTask> tasks, const SimConfig& cfg) {
  if (tasks.empty()) throw InvalidInput("a group needs at least one agent");
  for (const auto& task : tasks) {
    if (task.budget < 1) throw InvalidInput("step budget must be at least 1");
    if (!env.contains(task.start)) throw InvalidInput("start '" + task.start + "' is not in the environment");
    if (!env.contains(task.goal)) throw InvalidInput("goal '" + task.goal + "' is not in the environment");
  }
  if (!cfg.observers.empty() && cfg.observers.size() != tasks.size()) {
    throw InvalidInput("observer stream count does not match the agent count");
  }
  const std::size_t n = tasks.size();
  const bool sharing = cfg.sharing && n > 1;
  if (sharing) {
    validate(cfg.matcher);
    if (cfg.matcher.mode == MatchMode::Embed && !cfg.embeddings) {
      throw InvalidInput("embedding matching needs an embedding table");
    }
  }

  std::vector<Perception> sense(n);
  std::vector<AgentState> agents;
  for (std::size_t k = 0; k < n; ++k) {
    sense[k] = {cfg.embeddings, cfg.observers.empty() ? k : cfg.observers[k]};
    agents.push_back(start_agent(static_cast<int>(k), env, tasks[k].start, sense[k]));
  }

  GroupOutcome out;
  std::vector<int> received(n, 0);
  FusionState fstate;

  auto share = [&](int t) {
    if (!sharing) return;
    std::vector<MemoryGraph> snaps;
    for (const auto& a : agents) snaps.push_back(a.memory);
    std::vector<PairMatches> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      if (cfg.topology == ShareTopology::PrimaryOnly && i > 0) break;
      for (std::size_t j = i + 1; j < n; ++j) {
        PairMatches pm{static_cast<int>(i), static_cast<int>(j), detect(snaps[i], snaps[j], cfg.matcher)};
        if (!pm.matches.empty()) out.overlap_detected = true;
        pairs.push_back(std::move(pm));
      }
    }
    const auto events = maybe_fuse(fstate, snaps, cfg.fusion, pairs, t);
    if (events.empty()) return;
    std::vector<MemoryGraph> live;
    for (auto& a : agents) live.push_back(std::move(a.memory));
    apply_events(live, snaps, events);
    for (std::size_t k = 0; k < n; ++k) agents[k].memory = std::move(live[k]);
    for (const auto& ev : events) {
      for (const int target : ev.applied_to) ++received[static_cast<std::size_t>(target)];
    }
    if (!out.first_fusion_step) out.first_fusion_step = t;
  };

  share(0);
  if (cfg.on_tick) cfg.on_tick(0, agents);
  int t = 0;
  while (std::any_of(agents.begin(), agents.end(), [](const AgentState& a) { return !a.stopped; })) {
    ++t;
    for (std::size_t k = 0; k < n; ++k) {
      if (agents[k].stopped) continue;
      const auto action = decide(agents[k], tasks[k].goal, tasks[k].budget);
      execute(agents[k], env, action, cfg.alias_eps, sense[k], t);
    }
    share(t);
    if (cfg.on_tick) cfg.on_tick(t, agents);
  }

  out.ticks = t;
  for (std::size_t k = 0; k < n; ++k) {
    AgentOutcome o;
    for (const auto& h : agents[k].history) o.trajectory.push_back(h.id);
    o.traveled = agents[k].traveled;
    o.steps = agents[k].steps_taken;
    o.sharing_events = received[k];
    out.agents.push_back(std::move(o));
    out.memories.push_back(std::move(agents[k].memory));
  }
  return out;
}

AgentOutcome run_episode(const EnvGraph& env, const Episode& ep, std::span<const Episode> peers,
                         const SimConfig& cfg, int budget) {
  if (budget < 1) throw InvalidInput("step budget must be at least 1");
  validate_episode(ep, env);
  std::vector<AgentTask> tasks{{ep.start(), ep.goal(), budget}};
  if (cfg.sharing) {
    for (const auto& p : peers) {
      validate_episode(p, env);
      tasks.push_back({p.start(), p.goal(), default_budget(p.gt_path.size())});
    }
  }
  SimConfig local = cfg;
  if (local.observers.size() != tasks.size()) local.observers.clear();
  return simulate(env, tasks, local).agents.front();
}

}  // namespace covln
