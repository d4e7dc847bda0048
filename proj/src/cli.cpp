#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dex/debias_sampler.hpp"
#include "dex/error.hpp"
#include "dex/pipeline.hpp"

namespace {

using nlohmann::json;

struct Globals {
  std::string config;
  std::string out;
  std::string in;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

int fail(const json& err) {
  std::cerr << json{{"error", err}}.dump(2) << "\n";
  return 1;
}

dex::RunConfig load_config(const Globals& g) {
  if (g.config.empty()) throw dex::Error(dex::ErrorCode::InvalidArgument, "--config is required");
  dex::RunConfig c = dex::RunConfig::load(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

void print_summary(const dex::RunReport& r) {
  json out = r.to_json();
  out["manifest"] = r.manifest.to_json();
  std::cout << out.dump(2) << "\n";
}

int run_stages(const Globals& g, const std::vector<std::string>& stages, bool needs_input) {
  const dex::RunConfig cfg = load_config(g);
  if (g.out.empty()) throw dex::Error(dex::ErrorCode::InvalidArgument, "--out is required");
  std::vector<dex::DemoRecord> input;
  if (needs_input) {
    if (g.in.empty()) throw dex::Error(dex::ErrorCode::InvalidArgument, "--in is required");
    input = dex::load_records(g.in, dex::HandModel::load(cfg.resolve(cfg.hand)));
  }
  const dex::RunReport r = dex::run_pipeline(cfg, g.out, g.jobs, std::move(input), stages.empty() ? nullptr : &stages);
  print_summary(r);
  return 0;
}

int print_histograms(const Globals& g) {
  run_stages(g, {"debias"}, true);
  const json stats = json::parse(dex::read_file(std::filesystem::path(g.out) / "debias_stats.json"));
  for (const auto& [id, o] : stats.at("objects").items()) {
    const auto counts = o.at("counts").get<std::vector<std::int64_t>>();
    std::int64_t peak = 0, used = 0;
    for (auto c : counts) {
      peak = std::max(peak, c);
      used += c > 0;
    }
    std::cerr << id << ": " << o.at("total").get<std::int64_t>() << " records over " << used << "/" << counts.size()
              << " points, peak " << peak << ", tv to uniform " << dex::tv_to_uniform(counts) << "\n";
  }
  return 0;
}

int export_json(const Globals& g) {
  if (g.in.empty() || g.out.empty()) throw dex::Error(dex::ErrorCode::InvalidArgument, "export needs --in and --out");
  std::vector<dex::DemoRecord> records;
  if (!g.config.empty()) {
    const dex::RunConfig cfg = load_config(g);
    records = dex::load_records(g.in, dex::HandModel::load(cfg.resolve(cfg.hand)));
  } else if (std::filesystem::path(g.in).extension() == ".json") {
    const dex::Manifest m = dex::Manifest::load(g.in);
    records = m.read_records(std::filesystem::path(g.in).parent_path());
  } else {
    records = dex::read_shard(g.in).records;
  }
  json arr = json::array();
  for (const auto& r : records) arr.push_back(dex::record_to_json(r));
  dex::write_file(g.out, arr.dump(1) + "\n");
  std::cout << json{{"records", records.size()}, {"out", g.out}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dexterous grasp and motion dataset engine"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--config", g.config, "run config JSON");
  app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory (file for export)");
  app.fallthrough();

  auto* synth = app.add_subcommand("synthesize", "optimize seed grasps for every configured object");
  auto* post = app.add_subcommand("post-opt", "refine generated proposals with the post-task energy");
  auto* plan = app.add_subcommand("plan", "attach reach and post-grasp trajectories");
  auto* eval = app.add_subcommand("eval", "compute per-record metrics");
  auto* debias = app.add_subcommand("debias", "association histograms and condition samples");
  auto* exp = app.add_subcommand("export", "write records as JSON");
  auto* pipe = app.add_subcommand("pipeline", "run the stage list from the config");
  for (auto* sub : {post, plan, eval, debias, exp}) sub->add_option("--in", g.in, "input shard or manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (synth->parsed()) return run_stages(g, {"synthesize"}, false);
    if (post->parsed()) return run_stages(g, {"post-opt"}, true);
    if (plan->parsed()) return run_stages(g, {"plan"}, true);
    if (eval->parsed()) return run_stages(g, {"eval"}, true);
    if (debias->parsed()) return print_histograms(g);
    if (exp->parsed()) return export_json(g);
    if (pipe->parsed()) return run_stages(g, {}, false);
  } catch (const dex::StageError& e) {
    return fail({{"code", std::string(dex::to_string(e.code()))},
                 {"cause", std::string(dex::to_string(e.cause()))},
                 {"stage", e.stage()},
                 {"partial_outputs", e.partial_outputs()},
                 {"message", e.what()}});
  } catch (const dex::Error& e) {
    return fail({{"code", std::string(dex::to_string(e.code()))}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return fail({{"code", "Internal"}, {"message", e.what()}});
  }
  return 1;
}
