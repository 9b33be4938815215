#include <doctest.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "covln/csv.hpp"
#include "covln/embedding.hpp"
#include "covln/harness.hpp"
#include "fixtures.hpp"

using namespace covln;

namespace {

ExperimentConfig small_config(std::uint64_t seed = 1) {
  ExperimentConfig cfg;
  cfg.envs = {generate_random_geometric({80, 3.5, 25.0, 25.0}, seed, "rgg")};
  cfg.episodes = generate_episodes(cfg.envs.front(), 30, 3, 6, seed);
  cfg.seed = seed;
  return cfg;
}

std::vector<SummaryRow> overall(std::span<const SummaryRow> rows) {
  std::vector<SummaryRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [](const SummaryRow& r) { return r.bucket == "all"; });
  return out;
}

std::set<std::string> self_vids(const MemoryGraph& m) {
  std::set<std::string> out;
  for (const auto& [k, p] : m.nodes()) {
    if (p.provenance.is_self()) out.insert(p.viewpoint_id);
  }
  return out;
}

}  // namespace

TEST_CASE("episode generation") {
  const auto env = fixture::grid(4, 4);
  const auto one = generate_episodes(env, 1, 1, 1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].gt_path.size() == 2);
  CHECK(one[0].instruction == "Go to viewpoint " + one[0].goal() + ".");

  const auto rgg = generate_random_geometric({200, 4.5, 40.0, 40.0}, 1);
  const auto a = generate_episodes(rgg, 50, 4, 7, 3);
  CHECK(a == generate_episodes(rgg, 50, 4, 7, 3));
  CHECK_FALSE(a == generate_episodes(rgg, 50, 4, 7, 4));
  std::set<std::string> ids;
  for (const auto& ep : a) {
    CHECK_NOTHROW(validate_episode(ep, rgg));
    CHECK(ep.gt_path.size() >= 5);
    CHECK(ep.gt_path.size() <= 8);
    const auto sp = shortest_path(rgg, ep.start(), ep.goal());
    CHECK(sp->path == ep.gt_path);
    ids.insert(ep.episode_id);
  }
  CHECK(ids.size() == 50);

  // more episodes than distinct paths: draws repeat
  CHECK(generate_episodes(env, 100, 6, 6, 0).size() == 100);

  try {
    generate_episodes(env, 1, 7, 9, 0);
    FAIL("infeasible length accepted");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("longest feasible path has 6 edges") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_episodes(env, 0, 1, 2, 0), InvalidInput);
  CHECK_THROWS_AS(generate_episodes(env, 1, 3, 2, 0), InvalidInput);
}

TEST_CASE("synthetic embeddings") {
  const auto env = fixture::grid(3, 3);
  const auto clean = make_embeddings(env, 8, 0.0, 5);
  CHECK(clean.dim() == 8);
  for (const auto& vp : env.viewpoints()) {
    CHECK(clean.at(0, vp.id) == clean.at(1, vp.id));
    CHECK(clean.at(0, vp.id) == clean.base(vp.id));
  }
  CHECK(make_embeddings(env, 8, 0.0, 5).base("v0004") == clean.base("v0004"));
  const auto noisy = make_embeddings(env, 8, 0.1, 5);
  CHECK_FALSE(noisy.at(0, "v0004") == noisy.at(1, "v0004"));
  CHECK(noisy.at(0, "v0004") == noisy.at(0, "v0004"));
  CHECK_THROWS_AS(make_embeddings(env, 2, 0.0, 5), InvalidInput);
  CHECK_THROWS_AS(make_embeddings(env, 8, -0.1, 5), InvalidInput);
  CHECK_THROWS_AS(clean.base("zz"), InvalidInput);
}

TEST_CASE("zero-noise embedding matching reproduces id matching on co-visited nodes") {
  const auto env = generate_random_geometric({100, 3.5, 25.0, 25.0}, 2);
  const auto corpus = generate_episodes(env, 20, 4, 8, 2);
  const auto table = make_embeddings(env, 32, 0.0, 2);
  auto embed = parse_matcher("embed:0.9,2");
  for (std::size_t k = 0; k + 1 < corpus.size(); k += 2) {
    auto a = start_agent(0, env, corpus[k].start(), {&table, 11});
    auto b = start_agent(1, env, corpus[k + 1].start(), {&table, 12});
    for (std::size_t s = 1; s < corpus[k].gt_path.size(); ++s) {
      execute(a, env, Action::move_to(corpus[k].gt_path[s]), 0.5, {&table, 11}, static_cast<int>(s));
    }
    for (std::size_t s = 1; s < corpus[k + 1].gt_path.size(); ++s) {
      execute(b, env, Action::move_to(corpus[k + 1].gt_path[s]), 0.5, {&table, 12}, static_cast<int>(s));
    }
    const auto by_id = detect(a.memory, b.memory, {});
    const auto by_embed = detect(a.memory, b.memory, embed);
    REQUIRE(by_id.size() == by_embed.size());
    for (std::size_t m = 0; m < by_id.size(); ++m) {
      REQUIRE(by_id[m].node_a == by_embed[m].node_a);
      REQUIRE(by_id[m].node_b == by_embed[m].node_b);
      REQUIRE(by_embed[m].confidence == 1.0);
    }
  }
}

TEST_CASE("match recall does not grow with embedding noise") {
  const auto env = generate_random_geometric({100, 3.5, 25.0, 25.0}, 6);
  const std::vector<double> sigmas = {0.0, 0.02, 0.05, 0.1, 0.2};
  std::vector<double> recall(sigmas.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto corpus = generate_episodes(env, 2, 5, 9, seed);
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
      const auto table = make_embeddings(env, 32, sigmas[s], seed);
      auto walk = [&](int id, const Episode& ep) {
        auto st = start_agent(id, env, ep.start(), {&table, static_cast<std::uint64_t>(id)});
        for (std::size_t k = 1; k < ep.gt_path.size(); ++k) {
          execute(st, env, Action::move_to(ep.gt_path[k]), 0.5, {&table, static_cast<std::uint64_t>(id)},
                  static_cast<int>(k));
        }
        return st.memory;
      };
      const auto a = walk(0, corpus[0]);
      const auto b = walk(1, corpus[1]);
      const auto truth = detect(a, b, {});
      if (truth.empty()) continue;
      std::size_t hits = 0;
      for (const auto& m : detect(a, b, parse_matcher("embed:0.9,2"))) {
        hits += a.node(m.node_a).viewpoint_id == b.node(m.node_b).viewpoint_id ? 1 : 0;
      }
      recall[s] += static_cast<double>(hits) / static_cast<double>(truth.size());
    }
  }
  for (std::size_t s = 1; s < sigmas.size(); ++s) CHECK(recall[s] <= recall[s - 1]);
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(validate(cfg));
  auto bad = cfg;
  bad.agents = 0;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = cfg;
  bad.episodes.clear();
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = cfg;
  bad.episodes.push_back(bad.episodes.front());
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = cfg;
  bad.episodes.front().scan_id = "elsewhere";
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = cfg;
  bad.jobs = 0;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = cfg;
  bad.grouping = GroupingMode::Pairs;
  bad.agents = 3;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  CHECK(parse_grouping("peers") == GroupingMode::Peers);
  CHECK_THROWS_AS(parse_grouping("triples"), InvalidInput);
}

TEST_CASE("group planning") {
  auto cfg = small_config();
  SUBCASE("pairs keep every episode scored once") {
    const auto plans = plan_groups(cfg);
    std::multiset<std::string> scored;
    for (const auto& p : plans) {
      for (std::size_t k = 0; k < p.scored; ++k) scored.insert(p.group.members[k].episode_id);
      for (const auto& m : p.group.members) CHECK(m.scan_id == p.group.members.front().scan_id);
    }
    CHECK(scored.size() == cfg.episodes.size());
    CHECK(std::set<std::string>(scored.begin(), scored.end()).size() == cfg.episodes.size());
  }
  SUBCASE("peers mode scores only the primary") {
    cfg.agents = 4;
    const auto plans = plan_groups(cfg);
    CHECK(plans.size() == cfg.episodes.size());
    for (const auto& p : plans) {
      CHECK(p.scored == 1);
      CHECK(p.group.members.size() <= 4);
    }
  }
  SUBCASE("one agent means solo groups") {
    cfg.agents = 1;
    for (const auto& p : plan_groups(cfg)) CHECK(p.group.members.size() == 1);
  }
}

TEST_CASE("disjoint components: a group equals two solo runs") {
  const auto env = fixture::twin_islands(8);
  std::vector<Episode> left, right;
  for (const auto& ep : generate_episodes(env, 60, 3, 6, 8)) {
    (ep.start().front() == 'L' ? left : right).push_back(ep);
  }
  REQUIRE_FALSE(left.empty());
  REQUIRE_FALSE(right.empty());
  ExperimentConfig cfg;
  cfg.envs = {env};
  cfg.episodes = {left.front(), right.front()};
  GroupPlan plan;
  plan.group = {0, {left.front(), right.front()}, {false, false}};
  plan.scored = 2;
  const auto shared = run_group(env, plan, cfg, nullptr);
  CHECK_FALSE(shared.groups.front().overlap_detected);

  auto off = cfg;
  off.sharing = false;
  const auto solo = run_group(env, plan, off, nullptr);
  REQUIRE(shared.rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK(shared.rows[k].result == solo.rows[k].result);
}

TEST_CASE("first fusion step is the first tick the memories share a node") {
  const auto env = fixture::grid(5, 5);
  const auto a = fixture::episode("a", "grid", {"v0000", "v0001", "v0002", "v0003", "v0004"});
  const auto b = fixture::episode("b", "grid", {"v0024", "v0019", "v0014", "v0009", "v0004"});
  ExperimentConfig cfg;
  cfg.envs = {env};
  cfg.episodes = {a, b};

  // walks coincide with the shared run until the first fusion
  std::optional<int> first_common;
  SimConfig probe;
  probe.sharing = false;
  probe.on_tick = [&](int t, std::span<const AgentState> agents) {
    if (first_common) return;
    const auto x = self_vids(agents[0].memory), y = self_vids(agents[1].memory);
    std::vector<std::string> both;
    std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(both));
    if (!both.empty()) first_common = t;
  };
  const int budget = static_cast<int>(cfg.budget_factor * 5 + cfg.budget_slack);
  const std::vector<AgentTask> tasks = {{a.start(), a.goal(), budget}, {b.start(), b.goal(), budget}};
  simulate(env, tasks, probe);
  REQUIRE(first_common);

  GroupPlan plan;
  plan.group = {0, {a, b}, {false, false}};
  plan.scored = 2;
  const auto rec = run_group(env, plan, cfg, nullptr);
  const auto& g = rec.groups.front();
  CHECK(g.overlap_detected);
  REQUIRE(g.first_fusion_step);
  CHECK(*g.first_fusion_step == *first_common);
}

TEST_CASE("experiment rows") {
  auto cfg = small_config(3);
  const auto rec = run_experiment(cfg);
  CHECK(rec.rows.size() == cfg.episodes.size());
  CHECK(std::is_sorted(rec.rows.begin(), rec.rows.end(),
                       [](const RunRow& x, const RunRow& y) { return x.result.episode_id < y.result.episode_id; }));
  for (const auto& r : rec.rows) {
    CHECK(r.scan_id == "rgg");
    CHECK(r.result.steps <= static_cast<int>(cfg.budget_factor * 8 + cfg.budget_slack));
  }

  const auto csv = results_csv(rec, cfg);
  CHECK(csv.rfind("episode_id,scan_id,agents,pairing,fusion,matcher,tl,ne,osr,sr,spl,steps,sharing_events,seed\n", 0) == 0);
  CHECK(csv == results_csv(run_experiment(cfg), cfg));
  const auto parsed = csv::parse(csv);
  CHECK(parsed.size() == cfg.episodes.size() + 1);

  auto wide = cfg;
  wide.jobs = 6;
  CHECK(results_csv(run_experiment(wide), wide) == csv);

  const auto json = nlohmann::json::parse(results_json(rec, cfg));
  CHECK(json.is_object());
}

TEST_CASE("summaries") {
  auto cfg = small_config(4);
  const auto rec = run_experiment(cfg);
  const auto rows = summarize(rec, cfg, "base");
  REQUIRE_FALSE(rows.empty());
  CHECK(rows.front().bucket == "all");
  CHECK(rows.front().summary.episodes == cfg.episodes.size());
  std::size_t bucketed = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].summary.episodes > 0);
    bucketed += rows[k].summary.episodes;
  }
  CHECK(bucketed == cfg.episodes.size());
  const auto text = summary_csv(rows);
  CHECK(text.find(",on,") != std::string::npos);
}

TEST_CASE("sweep syntax") {
  const std::vector<SweepAxis> axes = {parse_sweep("agents=1..2"), parse_sweep("sharing=off,on")};
  CHECK(axes[0].values == std::vector<std::string>{"1", "2"});
  CHECK_THROWS_AS(parse_sweep("colour=red"), InvalidInput);
  CHECK_THROWS_AS(parse_sweep("agents"), InvalidInput);
  CHECK_THROWS_AS(parse_sweep("agents=0"), InvalidInput);
  CHECK_THROWS_AS(parse_sweep("agents=3..2"), InvalidInput);
  CHECK_THROWS_AS(parse_sweep("sharing=maybe"), InvalidInput);

  const auto cfg = small_config();
  const auto none = expand_sweep(cfg, {});
  REQUIRE(none.size() == 1);
  CHECK(none.front().label == "base");
  const auto points = expand_sweep(cfg, axes);
  REQUIRE(points.size() == 4);
  CHECK(points[0].label == "agents=1;sharing=off");
  CHECK(points[3].label == "agents=2;sharing=on");
  CHECK(points[3].config.grouping == GroupingMode::Peers);
  CHECK(points[3].config.agents == 2);
  CHECK_FALSE(points[2].config.sharing);

  const std::vector<SweepAxis> grid = {parse_sweep("fusion=grid")};
  const auto combos = expand_sweep(cfg, grid);
  REQUIRE(combos.size() == 8);
  std::set<std::string> distinct;
  for (const auto& p : combos) distinct.insert(describe(p.config.fusion));
  CHECK(distinct.size() == 8);
  CHECK(describe(combos.front().config.fusion) == "trigger=detect,dir=bi,persist=on");
}

TEST_CASE("sweep agents=1 equals the isolated baseline") {
  auto cfg = small_config(5);
  const std::vector<SweepAxis> axes = {parse_sweep("agents=1..1")};
  const auto points = expand_sweep(cfg, axes);
  REQUIRE(points.size() == 1);
  auto iso = cfg;
  iso.sharing = false;
  const auto base = run_experiment(iso);
  const auto swept = run_experiment(points.front().config);
  REQUIRE(swept.rows.size() == base.rows.size());
  for (std::size_t k = 0; k < base.rows.size(); ++k) CHECK(swept.rows[k].result == base.rows[k].result);

  const auto rows = overall(run_sweep(cfg, axes));
  const auto want = overall(summarize(base, iso, "base"));
  REQUIRE(rows.size() == 1);
  CHECK(rows.front().summary.sr == want.front().summary.sr);
  CHECK(rows.front().summary.spl == want.front().summary.spl);
}

TEST_CASE("prior pairing overlaps at least as much as random pairing") {
  auto cfg = small_config(6);
  const std::vector<SweepAxis> pairing = {parse_sweep("pairing=prior,random")};
  const auto rows = overall(run_sweep(cfg, pairing));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pairing == "prior");
  CHECK(rows[0].mean_overlap >= rows[1].mean_overlap);

  const std::vector<SweepAxis> grid = {parse_sweep("fusion=grid")};
  CHECK(overall(run_sweep(cfg, grid)).size() == 8);
}
