#include <doctest.h>

#include <filesystem>
#include <map>

#include <json.hpp>

#include "dex/dataset.hpp"
#include "dex/debias_sampler.hpp"
#include "dex/pipeline.hpp"
#include "error_check.hpp"

using namespace dex;
using nlohmann::json;

namespace {

const std::filesystem::path kData = DEX_DATA_DIR;

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dex_test_pipeline_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json small_config() {
  return {{"hand", (kData / "hands/toy_hand.json").string()},
          {"objects",
           {{{"id", "cube"}, {"asset", (kData / "objects/cube.obj").string()}},
            {{"id", "sphere"}, {"asset", (kData / "objects/sphere.obj").string()}, {"table_height", -0.5}},
            {{"id", "cylinder"}, {"asset", (kData / "objects/cylinder.obj").string()}}}},
          {"seed", 11},
          {"optim", {{"restarts", 16}, {"steps", 400}}},
          {"post", {{"steps", 30}}},
          {"plan", {{"iterations", 60}, {"waypoints", 12}}},
          {"debias", {{"points", 128}, {"samples", 12}}}};
}

RunConfig make(const json& doc, const std::filesystem::path& base = ".") { return RunConfig::from_json(doc, base); }

std::map<std::string, std::uint32_t> crcs(const Manifest& m) {
  std::map<std::string, std::uint32_t> out;
  for (const auto& s : m.shards) out[s.path] = s.crc32;
  return out;
}

}  // namespace

TEST_CASE("seed-only run: synthesize and eval") {
  const RunConfig cfg = make(small_config());
  const auto a = scratch("seed_a");
  const RunReport r = run_pipeline(cfg, a, 0);
  REQUIRE(r.stages.size() == 2);
  CHECK(r.stages[0].name == "synthesize");
  CHECK(r.stages[0].records_out <= 48);
  CHECK(r.stages[0].records_out > 0);

  const Manifest m = Manifest::load(a / "manifest.json");
  CHECK(m.total_records() == r.stages[1].records_out);
  const auto records = m.read_records(a);
  std::map<std::string, int> per_object;
  for (const auto& rec : records) {
    REQUIRE(rec.metrics.has_value());
    CHECK(rec.provenance.generator == "optim");
    CHECK(rec.provenance.engine_version == kEngineVersion);
    CHECK_FALSE(rec.condition.has_value());
    CHECK(rec.metrics->feasible == (rec.metrics->max_penetration <= cfg.metrics.feasible_penetration &&
                                    rec.metrics->contact_count >= 2));
    ++per_object[rec.object.id];
  }
  for (const auto& [id, n] : per_object) CHECK(n <= 16);
  CHECK(std::filesystem::exists(a / "report.json"));

  SUBCASE("same config and seed give the same manifest, whatever the thread count") {
    const auto b = scratch("seed_b");
    run_pipeline(cfg, b, 1);
    CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
    CHECK(crcs(Manifest::load(b / "manifest.json")) == crcs(m));
    for (const auto& s : m.shards) CHECK(read_file(a / s.path) == read_file(b / s.path));
  }
  SUBCASE("a different seed changes the data") {
    json doc = small_config();
    doc["seed"] = 12;
    const auto c = scratch("seed_c");
    run_pipeline(make(doc), c, 0);
    CHECK(crcs(Manifest::load(c / "manifest.json")) != crcs(m));
  }
}

TEST_CASE("debias, propose, post-opt, plan") {
  const auto dir = scratch("full");
  write_file(dir / "ckpt.json", R"({"offset": 0.12, "joint_jitter": 0.02})");
  json doc = small_config();
  doc["iteration"] = 3;
  doc["proposal"] = {{"command", std::string(DEX_FAKE_PROPOSER) + " --hand " + (kData / "hands/toy_hand.json").string()},
                     {"checkpoint", "ckpt.json"}};
  doc["stages"] = {"synthesize", "eval", "debias", "propose", "post-opt", "eval", "plan", "export"};
  const RunConfig cfg = make(doc, dir);
  const auto out = dir / "out";
  const RunReport r = run_pipeline(cfg, out, 0);
  REQUIRE(r.stages.size() == 8);

  const std::size_t seeds = r.stages[1].records_out;
  CHECK(r.stages[3].records_out == seeds + 12);
  CHECK(r.stages[4].records_out == r.stages[3].records_out);
  CHECK(r.stages[6].records_out == r.stages[3].records_out);

  // the histogram on disk is a recount of the seed records
  const HandModel hand = HandModel::load(kData / "hands/toy_hand.json");
  const json stats_doc = json::parse(read_file(out / "debias_stats.json"));
  const auto seed_records = read_shard(out / "1-eval-0000.shard").records;
  int budget_total = 0;
  for (const auto& oc : cfg.objects) {
    const PointCloud cloud = read_point_cloud(out / ("cloud-" + oc.ref.id + ".dexpc"));
    CHECK(cloud.size() == 128);
    std::vector<std::int64_t> recount(cloud.size(), 0);
    for (const auto& rec : seed_records) {
      if (rec.object.id == oc.ref.id) ++recount[associate_point(rec.keyframe, hand, cloud)];
    }
    CHECK(stats_doc.at("objects").at(oc.ref.id).at("counts").get<std::vector<std::int64_t>>() == recount);
    CHECK(stats_doc.at("objects").at(oc.ref.id).at("point_hash").get<std::string>().size() == 16);

    const json cond = json::parse(read_file(out / ("conditions-" + oc.ref.id + ".json")));
    CHECK(cond.at("iteration") == 3);
    for (int k : cond.at("indices").get<std::vector<int>>()) {
      CHECK(k >= 0);
      CHECK(k < 128);
    }
    budget_total += static_cast<int>(cond.at("indices").size());
  }
  CHECK(budget_total == 12);

  const Manifest m = Manifest::load(out / "manifest.json");
  const auto records = m.read_records(out);
  REQUIRE(records.size() == seeds + 12);
  int generated = 0;
  for (const auto& rec : records) {
    REQUIRE(rec.metrics.has_value());
    REQUIRE(rec.trajectory.has_value());
    const Trajectory& t = *rec.trajectory;
    CHECK(t.stages.front() == Stage::Reach);
    CHECK(t.stages.back() == Stage::Post);
    int grasp_frames = 0;
    for (std::size_t f = 0; f < t.size(); ++f) {
      if (t.stages[f] == Stage::Grasp) {
        ++grasp_frames;
        CHECK(t.frames[f].joints == rec.keyframe.joints);
      }
    }
    CHECK(grasp_frames == 1);
    const double lift = t.frames.back().translation.z() - rec.keyframe.translation.z();
    CHECK(lift == doctest::Approx(0.4).epsilon(1e-12));
    if (rec.provenance.generator.rfind("gen-iter-", 0) == 0) {
      ++generated;
      CHECK(rec.provenance.generator == "gen-iter-3-post");
      CHECK(rec.condition.has_value());
    }
  }
  CHECK(generated == 12);
  CHECK(std::filesystem::exists(out / "export.json"));
  CHECK(json::parse(read_file(out / "export.json")).size() == records.size());
  CHECK(r.stages[2].outputs.size() == 7);
}

TEST_CASE("stage failures name the stage and its partial outputs") {
  const auto dir = scratch("fail");
  json doc = small_config();
  doc["optim"]["steps"] = 50;
  doc["proposal"] = {{"command", "false"}, {"checkpoint", "none"}};
  doc["stages"] = {"synthesize", "debias", "propose"};
  try {
    run_pipeline(make(doc, dir), dir / "out", 0);
    FAIL("no error");
  } catch (const StageError& e) {
    CHECK(e.code() == ErrorCode::StageFailed);
    CHECK(e.stage() == "propose");
    CHECK(e.partial_outputs().empty());
  }
  CHECK(std::filesystem::exists(dir / "out/debias_stats.json"));

  doc["stages"] = {"propose"};
  try {
    run_pipeline(make(doc, dir), dir / "out2", 0);
    FAIL("no error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "propose");
    CHECK(e.cause() == ErrorCode::InvalidArgument);
  }

  // the proposer writes a shard for the wrong hand
  json other = json::parse(read_file(kData / "hands/toy_hand.json"));
  other["links"][0]["spheres"][0]["radius"] = 0.09;
  write_file(dir / "other_hand.json", other.dump());
  doc["proposal"] = {{"command", std::string(DEX_FAKE_PROPOSER) + " --hand " + (dir / "other_hand.json").string()},
                     {"checkpoint", "ckpt.json"}};
  write_file(dir / "ckpt.json", "{}");
  doc["stages"] = {"synthesize", "debias", "propose"};
  try {
    run_pipeline(make(doc, dir), dir / "out3", 0);
    FAIL("no error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "propose");
    CHECK(e.cause() == ErrorCode::DimensionMismatch);
    CHECK(e.partial_outputs() == std::vector<std::string>{"proposals-cube.shard"});
  }
}

TEST_CASE("input records from another run") {
  const auto dir = scratch("chain");
  json doc = small_config();
  doc["optim"]["steps"] = 100;
  doc["stages"] = {"synthesize"};
  const RunConfig cfg = make(doc);
  run_pipeline(cfg, dir / "a", 0);
  const HandModel hand = HandModel::load(kData / "hands/toy_hand.json");
  auto records = load_records(dir / "a/manifest.json", hand);
  const std::size_t n = records.size();
  CHECK(load_records(dir / "a/0-synthesize-0000.shard", hand).size() == n);

  const std::vector<std::string> eval = {"eval"};
  const RunReport r = run_pipeline(cfg, dir / "b", 0, records, &eval);
  CHECK(r.stages[0].records_in == n);
  for (const auto& rec : Manifest::load(dir / "b/manifest.json").read_records(dir / "b")) CHECK(rec.metrics.has_value());

  records[0].object.id = "teapot";
  CHECK_THROWS_AS_ERROR(run_pipeline(cfg, dir / "c", 0, records, &eval), ErrorCode::UnknownObject);
}

TEST_CASE("config strictness") {
  CHECK_NOTHROW(make(small_config()));
  json doc = small_config();
  doc["optim"]["stepz"] = 3;
  CHECK_THROWS_AS_ERROR(make(doc), ErrorCode::InvalidArgument);
  doc = small_config();
  doc["colour"] = "red";
  CHECK_THROWS_AS_ERROR(make(doc), ErrorCode::InvalidArgument);
  doc = small_config();
  doc["stages"] = {"synthesize", "dance"};
  CHECK_THROWS_AS_ERROR(make(doc), ErrorCode::InvalidArgument);
  doc = small_config();
  doc["objects"] = json::array();
  CHECK_THROWS_AS_ERROR(make(doc), ErrorCode::InvalidArgument);
  doc = small_config();
  doc["task"] = "articulation";
  const RunConfig art = make(doc);
  CHECK_THROWS_AS_ERROR(run_pipeline(art, scratch("art"), 0), ErrorCode::MissingArticulationSpec);

  // canonical form round trips
  const RunConfig c = make(small_config());
  CHECK(make(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("bundled configs parse") {
  for (const char* name : {"seed_toy.json", "pipeline_toy.json", "articulation_toy.json"}) {
    CAPTURE(name);
    const RunConfig c = RunConfig::load(kData / "configs" / name);
    CHECK(std::filesystem::exists(c.resolve(c.hand)));
    for (const auto& o : c.objects) CHECK(std::filesystem::exists(c.resolve(o.ref.asset)));
  }
}
