// covln: command-line front end for environment/corpus generation, pairing,
// simulation runs, sweeps and result statistics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "covln/csv.hpp"
#include "covln/harness.hpp"

namespace {

using namespace covln;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw InvalidInput("cannot write " + out);
  f << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunOptions {
  std::vector<std::string> env_files;
  std::string episodes_file;
  int generate = 0;
  int min_len = 4;
  int max_len = 7;
  int agents = 2;
  std::string grouping = "auto";
  std::string pairing = "prior";
  std::string matcher = "id";
  std::string fusion = "trigger=detect,dir=bi,persist=on";
  std::string sharing = "on";
  std::string topology = "all";
  double thresh = kDefaultSuccessThreshold;
  double alias_eps = 0.5;
  int budget_factor = 2;
  int budget_slack = 10;
  std::size_t embed_dim = 32;
  double embed_noise = 0.0;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  std::string format = "csv";
  std::string dump_memories;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--env", o.env_files, "Environment JSON file (repeatable)")->required();
  cmd->add_option("--episodes", o.episodes_file, "Episode JSON-lines file");
  cmd->add_option("--generate", o.generate, "Generate this many episodes per environment instead of --episodes");
  cmd->add_option("--min-len", o.min_len, "Shortest generated path, in edges");
  cmd->add_option("--max-len", o.max_len, "Longest generated path, in edges");
  cmd->add_option("--agents", o.agents, "Agents per group");
  cmd->add_option("--grouping", o.grouping, "auto|pairs|peers");
  cmd->add_option("--pairing", o.pairing, "prior|random");
  cmd->add_option("--matcher", o.matcher, "id | coord:EPS | embed:TAU,ALPHA");
  cmd->add_option("--fusion", o.fusion, "trigger=detect|covisit,dir=bi|later,persist=on|off");
  cmd->add_option("--sharing", o.sharing, "on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--share-topology", o.topology, "all|primary-only");
  cmd->add_option("--thresh", o.thresh, "Success radius in meters");
  cmd->add_option("--alias-eps", o.alias_eps, "Radius under which a bridge target counts as the same place");
  cmd->add_option("--budget-factor", o.budget_factor, "Step budget = factor * |path| + slack");
  cmd->add_option("--budget-slack", o.budget_slack, "Step budget = factor * |path| + slack");
  cmd->add_option("--embed-dim", o.embed_dim, "Synthetic embedding dimension");
  cmd->add_option("--embed-noise", o.embed_noise, "Per-agent embedding noise sigma");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--jobs", o.jobs, "Groups simulated concurrently");
  cmd->add_option("--out", o.out, "Output file (stdout if omitted)");
  cmd->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
}

void dump_memories(const RunRecord& record, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& g : record.groups) {
    for (std::size_t k = 0; k < g.memories.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "group%05d-agent%zu.json", g.group_id, k);
      emit(memory_to_json(g.memories[k]) + "\n", (std::filesystem::path(dir) / name).string());
    }
  }
}

ExperimentConfig build_config(const RunOptions& o) {
  ExperimentConfig cfg;
  for (const auto& f : o.env_files) cfg.envs.push_back(load_env(f));
  if (!o.episodes_file.empty() && o.generate > 0) throw InvalidInput("use either --episodes or --generate, not both");
  if (!o.episodes_file.empty()) {
    cfg.episodes = load_episodes(o.episodes_file);
  } else if (o.generate > 0) {
    for (const auto& env : cfg.envs) {
      for (auto& ep : generate_episodes(env, o.generate, o.min_len, o.max_len, o.seed)) {
        cfg.episodes.push_back(std::move(ep));
      }
    }
  } else {
    throw InvalidInput("an episode source is required: --episodes FILE or --generate K");
  }
  cfg.agents = o.agents;
  cfg.grouping = parse_grouping(o.grouping);
  cfg.pairing = parse_pairing_strategy(o.pairing);
  cfg.matcher = parse_matcher(o.matcher);
  cfg.fusion = parse_fusion(o.fusion);
  cfg.sharing = o.sharing == "on";
  cfg.topology = parse_share_topology(o.topology);
  cfg.thresh = o.thresh;
  cfg.alias_eps = o.alias_eps;
  cfg.budget_factor = o.budget_factor;
  cfg.budget_slack = o.budget_slack;
  cfg.embed_dim = o.embed_dim;
  cfg.embed_noise = o.embed_noise;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.keep_memories = !o.dump_memories.empty();
  return cfg;
}

std::string summary_json(std::span<const SummaryRow> rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    doc.push_back({{"point", r.point},
                   {"agents", r.agents},
                   {"pairing", r.pairing},
                   {"fusion", r.fusion},
                   {"matcher", r.matcher},
                   {"sharing", r.sharing},
                   {"bucket", r.bucket},
                   {"episodes", r.summary.episodes},
                   {"tl", r.summary.tl},
                   {"ne", r.summary.ne},
                   {"osr", r.summary.osr},
                   {"sr", r.summary.sr},
                   {"spl", r.summary.spl},
                   {"mean_overlap", r.mean_overlap},
                   {"self_pairs", r.self_pairs},
                   {"seed", r.seed}});
  }
  return doc.dump(1) + "\n";
}

// Reads a per-episode results CSV back into EpisodeResults.
std::vector<EpisodeResult> read_results(const std::string& text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw InvalidInput("results file is empty");
  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw InvalidInput("results file has no '" + name + "' column");
  };
  const auto c_id = column("episode_id"), c_tl = column("tl"), c_ne = column("ne"), c_osr = column("osr"),
             c_sr = column("sr"), c_spl = column("spl");
  std::vector<EpisodeResult> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw InvalidInput("results row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) + " fields");
    }
    try {
      EpisodeResult e;
      e.episode_id = row[c_id];
      e.tl = std::stod(row[c_tl]);
      e.ne = std::stod(row[c_ne]);
      e.osr = row[c_osr] == "1";
      e.sr = row[c_sr] == "1";
      e.spl = std::stod(row[c_spl]);
      out.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw InvalidInput("results row " + std::to_string(r + 1) + " has a non-numeric metric");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent navigation with shared topological memory"};
  app.require_subcommand(1);

  // gen-env
  auto* gen_env = app.add_subcommand("gen-env", "Generate a synthetic environment");
  std::string env_kind = "random-geometric", env_scan = "scan0", env_out;
  GeneratorParams gen;
  gen.grid = {10, 10, 2.0};
  gen.rgg = {200, 4.5, 40.0, 40.0};
  std::uint64_t env_seed = 0;
  gen_env->add_option("--kind", env_kind, "grid|random-geometric");
  gen_env->add_option("--rows", gen.grid.rows, "Grid rows");
  gen_env->add_option("--cols", gen.grid.cols, "Grid columns");
  gen_env->add_option("--spacing", gen.grid.spacing, "Grid spacing (m)");
  gen_env->add_option("--nodes", gen.rgg.n, "Random-geometric point count");
  gen_env->add_option("--radius", gen.rgg.radius, "Random-geometric connection radius (m)");
  gen_env->add_option("--extent-x", gen.rgg.extent_x, "Random-geometric width (m)");
  gen_env->add_option("--extent-y", gen.rgg.extent_y, "Random-geometric depth (m)");
  gen_env->add_option("--scan-id", env_scan, "Scan id");
  gen_env->add_option("--seed", env_seed, "Random seed");
  gen_env->add_option("--out", env_out, "Output file (stdout if omitted)");

  // gen-episodes
  auto* gen_eps = app.add_subcommand("gen-episodes", "Generate a synthetic episode corpus");
  std::string eps_env, eps_out;
  int eps_count = 100, eps_min = 4, eps_max = 7;
  std::uint64_t eps_seed = 0;
  gen_eps->add_option("--env", eps_env, "Environment JSON file")->required();
  gen_eps->add_option("--count", eps_count, "Number of episodes");
  gen_eps->add_option("--min-len", eps_min, "Shortest path, in edges");
  gen_eps->add_option("--max-len", eps_max, "Longest path, in edges");
  gen_eps->add_option("--seed", eps_seed, "Random seed");
  gen_eps->add_option("--out", eps_out, "Output file (stdout if omitted)");

  // pair
  auto* pair = app.add_subcommand("pair", "Pair episodes within each scan");
  std::string pair_eps, pair_strategy = "prior", pair_out;
  std::uint64_t pair_seed = 0;
  pair->add_option("--episodes", pair_eps, "Episode JSON-lines file")->required();
  pair->add_option("--strategy", pair_strategy, "prior|random");
  pair->add_option("--seed", pair_seed, "Random seed");
  pair->add_option("--out", pair_out, "Output file (stdout if omitted)");

  // run / sweep
  auto* run = app.add_subcommand("run", "Simulate all groups and write per-episode results");
  RunOptions run_opts;
  std::string run_summary;
  add_run_options(run, run_opts);
  run->add_option("--summary", run_summary, "Also write the summary table to this file");
  run->add_option("--dump-memories", run_opts.dump_memories, "Write every agent's final memory as JSON into this directory");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations and write summary rows");
  RunOptions sweep_opts;
  std::vector<std::string> sweep_axes;
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--sweep", sweep_axes, "agents=A..B | pairing=prior,random | fusion=grid | sharing=off,on");

  // stats
  auto* stats = app.add_subcommand("stats", "Aggregate a per-episode results CSV");
  std::string stats_in, stats_out, stats_format = "csv";
  stats->add_option("--results", stats_in, "Per-episode results CSV")->required();
  stats->add_option("--out", stats_out, "Output file (stdout if omitted)");
  stats->add_option("--format", stats_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_env) {
      gen.kind = parse_env_kind(env_kind);
      emit(env_to_json(generate_synthetic(gen, env_seed, env_scan)), env_out);
    } else if (*gen_eps) {
      const auto env = load_env(eps_env);
      emit(episodes_to_jsonl(generate_episodes(env, eps_count, eps_min, eps_max, eps_seed)), eps_out);
    } else if (*pair) {
      const auto strategy = parse_pairing_strategy(pair_strategy);
      const auto episodes = load_episodes(pair_eps);
      emit(pairing_to_json(pair_episodes(episodes, strategy, pair_seed), strategy, pair_seed) + "\n", pair_out);
    } else if (*run) {
      const auto cfg = build_config(run_opts);
      const auto record = run_experiment(cfg);
      emit(run_opts.format == "json" ? results_json(record, cfg) : results_csv(record, cfg), run_opts.out);
      if (!run_summary.empty()) emit(summary_csv(summarize(record, cfg, "base")), run_summary);
      if (!run_opts.dump_memories.empty()) dump_memories(record, run_opts.dump_memories);
    } else if (*sweep) {
      const auto cfg = build_config(sweep_opts);
      std::vector<SweepAxis> axes;
      for (const auto& a : sweep_axes) axes.push_back(parse_sweep(a));
      const auto rows = run_sweep(cfg, axes);
      emit(sweep_opts.format == "json" ? summary_json(rows) : summary_csv(rows), sweep_opts.out);
    } else if (*stats) {
      const auto results = read_results(slurp(stats_in));
      SummaryRow row;
      row.point = stats_in;
      row.bucket = "all";
      row.summary = aggregate(results);
      const std::vector<SummaryRow> rows{row};
      if (stats_format == "json") {
        emit(summary_json(rows), stats_out);
      } else {
        const auto& s = row.summary;
        emit(csv::row({"episodes", "tl", "ne", "osr", "sr", "spl"}) +
                 csv::row({std::to_string(s.episodes), csv::fixed(s.tl), csv::fixed(s.ne), csv::fixed(s.osr),
                           csv::fixed(s.sr), csv::fixed(s.spl)}),
             stats_out);
      }
    }
  } catch (const InvalidInput& e) {
    std::cerr << "covln: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "covln: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
