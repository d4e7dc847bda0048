#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dex/dataset.hpp"
#include "dex/energy.hpp"
#include "dex/error.hpp"
#include "dex/grasp_optimizer.hpp"
#include "dex/metrics.hpp"
#include "dex/motion_planner.hpp"
#include "dex/scene.hpp"

namespace dex {

struct ObjectConfig {
  ObjectRef ref;
  std::optional<double> table_height;  // adds a slab whose top face sits here
  std::optional<ArticulationSpec> articulation;
};

struct DebiasConfig {
  double alpha = 1.0;
  int points = 512;
  std::uint64_t point_seed = 0;
  int samples = 64;  // condition samples per iteration, split by object_budget
};

/// External proposal generator, run once per object as
///   <command> --checkpoint C --cloud P --conditions F --n N --seed S --out O
/// through the shell. "{config_dir}" in the command expands to the config
/// file's directory.
struct ProposalConfig {
  std::string command;
  std::string checkpoint;
};

/// Single JSON document with sections hand, objects, task, seed, iteration,
/// weights, optim, post, plan, metrics, debias, proposal, stages. Relative
/// paths resolve against the config file's directory.
struct RunConfig {
  std::filesystem::path base_dir = ".";
  std::string hand;
  std::vector<ObjectConfig> objects;
  Task task = Task::Grasp;
  std::uint64_t seed = 0;
  int iteration = 0;
  EnergyWeights weights;
  OptimSettings optim;
  OptimSettings post = OptimSettings::post_defaults();
  PlanSettings plan;
  MetricSettings metrics;
  DebiasConfig debias;
  ProposalConfig proposal;
  std::vector<std::string> stages = {"synthesize", "eval"};

  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  /// Canonical form; every default made explicit.
  nlohmann::json to_json() const;
  std::filesystem::path resolve(const std::string& path) const;
};

const std::vector<std::string>& known_stages();

/// Thrown when a stage fails; names the stage and what it already wrote.
class StageError : public Error {
 public:
  StageError(std::string stage, std::vector<std::string> outputs, const std::string& message, ErrorCode cause)
      : Error(ErrorCode::StageFailed, message), stage_(std::move(stage)), outputs_(std::move(outputs)), cause_(cause) {}
  const std::string& stage() const { return stage_; }
  const std::vector<std::string>& partial_outputs() const { return outputs_; }
  ErrorCode cause() const { return cause_; }

 private:
  std::string stage_;
  std::vector<std::string> outputs_;
  ErrorCode cause_;
};

struct StageReport {
  std::string name;
  std::size_t records_in = 0;
  std::size_t records_out = 0;
  double seconds = 0.0;
  std::vector<std::string> outputs;  // relative to the output directory
  nlohmann::json details = nlohmann::json::object();
};

struct RunReport {
  Manifest manifest;
  std::vector<StageReport> stages;
  nlohmann::json to_json() const;
};

/// Runs `stages` (or config.stages) in order over an in-memory dataset
/// seeded with `input`. Every record-producing stage writes its shards to
/// `out_dir`; the final dataset is indexed by out_dir/manifest.json and the
/// per-stage counts and timings go to out_dir/report.json.
RunReport run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir, int jobs,
                       std::vector<DemoRecord> input = {}, const std::vector<std::string>* stages = nullptr);

/// Reads a manifest (.json) with all its shards, or a single shard.
std::vector<DemoRecord> load_records(const std::filesystem::path& path, const HandModel& model);

}  // namespace dex
