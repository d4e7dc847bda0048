#include "dex/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "dex/debias_sampler.hpp"
#include "dex/hash.hpp"
#include "dex/mesh_io.hpp"
#include "dex/parallel.hpp"

namespace dex {

namespace {

using nlohmann::json;

// Strict section reader: every key must be known.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "config section '" + name_ + "' must be an object");
    doc_ = doc;
  }
  template <typename T>
  Section& get(const char* key, T& field) {
    seen_.insert(key);
    if (doc_.contains(key)) {
      try {
        field = doc_.at(key).get<T>();
      } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, "config key '" + name_ + "." + key + "' has the wrong type");
      }
    }
    return *this;
  }
  void finish() const {
    for (const auto& [k, v] : doc_.items()) {
      if (!seen_.count(k)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + name_ + "." + k + "'");
    }
  }

 private:
  std::string name_;
  json doc_ = json::object();
  std::set<std::string> seen_;
};

void read_weights(const json& j, EnergyWeights& w) {
  Section(j, "weights")
      .get("w_sdf", w.w_sdf)
      .get("w_dis", w.w_dis)
      .get("w_joint", w.w_joint)
      .get("w_self", w.w_self)
      .get("w_smooth", w.w_smooth)
      .get("self_margin", w.self_margin)
      .get("friction", w.friction)
      .get("n_contacts", w.n_contacts)
      .get("tws_targets", w.tws_targets)
      .get("cone_edges", w.cone_edges)
      .get("nnls_iterations", w.nnls_iterations)
      .finish();
  w.validate();
}

json weights_json(const EnergyWeights& w) {
  return {{"w_sdf", w.w_sdf},         {"w_dis", w.w_dis},           {"w_joint", w.w_joint},
          {"w_self", w.w_self},       {"w_smooth", w.w_smooth},     {"self_margin", w.self_margin},
          {"friction", w.friction},   {"n_contacts", w.n_contacts}, {"tws_targets", w.tws_targets},
          {"cone_edges", w.cone_edges}, {"nnls_iterations", w.nnls_iterations}};
}

void read_optim(const json& j, const char* name, OptimSettings& s) {
  Section(j, name)
      .get("steps", s.steps)
      .get("step_size", s.step_size)
      .get("noise_scale", s.noise_scale)
      .get("restarts", s.restarts)
      .get("resample_contacts_every", s.resample_contacts_every)
      .get("translation_scale", s.translation_scale)
      .get("rotation_scale", s.rotation_scale)
      .get("joint_scale", s.joint_scale)
      .get("noise_decay_power", s.noise_decay_power)
      .get("rms_decay", s.rms_decay)
      .get("trace_every", s.trace_every)
      .finish();
  s.validate();
}

json optim_json(const OptimSettings& s) {
  return {{"steps", s.steps},
          {"step_size", s.step_size},
          {"noise_scale", s.noise_scale},
          {"restarts", s.restarts},
          {"resample_contacts_every", s.resample_contacts_every},
          {"translation_scale", s.translation_scale},
          {"rotation_scale", s.rotation_scale},
          {"joint_scale", s.joint_scale},
          {"noise_decay_power", s.noise_decay_power},
          {"rms_decay", s.rms_decay},
          {"trace_every", s.trace_every}};
}

void read_plan(const json& j, PlanSettings& s) {
  Section(j, "plan")
      .get("waypoints", s.waypoints)
      .get("dt", s.dt)
      .get("w_smooth", s.w_smooth)
      .get("w_sdf", s.w_sdf)
      .get("iterations", s.iterations)
      .get("step_size", s.step_size)
      .get("lift_height", s.lift_height)
      .get("articulation_delta", s.articulation_delta)
      .get("overshoot_fraction", s.overshoot_fraction)
      .get("tolerance", s.tolerance)
      .finish();
  s.validate();
}

json plan_json(const PlanSettings& s) {
  return {{"waypoints", s.waypoints},     {"dt", s.dt},
          {"w_smooth", s.w_smooth},       {"w_sdf", s.w_sdf},
          {"iterations", s.iterations},   {"step_size", s.step_size},
          {"lift_height", s.lift_height}, {"articulation_delta", s.articulation_delta},
          {"overshoot_fraction", s.overshoot_fraction}, {"tolerance", s.tolerance}};
}

void read_metrics(const json& j, MetricSettings& s) {
  Section(j, "metrics")
      .get("contact_threshold", s.contact_threshold)
      .get("friction", s.friction)
      .get("cone_edges", s.cone_edges)
      .get("directions", s.directions)
      .get("seed", s.seed)
      .get("entropy_bins", s.entropy_bins)
      .get("feasible_penetration", s.feasible_penetration)
      .get("feasible_contacts", s.feasible_contacts)
      .finish();
  s.validate();
}

json metrics_json(const MetricSettings& s) {
  return {{"contact_threshold", s.contact_threshold},
          {"friction", s.friction},
          {"cone_edges", s.cone_edges},
          {"directions", s.directions},
          {"seed", s.seed},
          {"entropy_bins", s.entropy_bins},
          {"feasible_penetration", s.feasible_penetration},
          {"feasible_contacts", s.feasible_contacts}};
}

Vec3 vec3_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidArgument, what + " must be a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

ObjectConfig read_object(const json& j, std::size_t index) {
  const std::string where = "objects[" + std::to_string(index) + "]";
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, where + " must be an object");
  ObjectConfig o;
  json art;
  double table = 0.0;
  bool has_table = j.contains("table_height");
  Section(j, where)
      .get("id", o.ref.id)
      .get("asset", o.ref.asset)
      .get("scale", o.ref.scale)
      .get("table_height", table)
      .get("articulation", art)
      .finish();
  if (o.ref.id.empty()) throw Error(ErrorCode::InvalidArgument, where + " needs an id");
  if (o.ref.asset.empty()) throw Error(ErrorCode::InvalidArgument, where + " needs an asset");
  if (!(o.ref.scale > 0.0)) throw Error(ErrorCode::InvalidArgument, where + " scale must be positive");
  if (has_table) o.table_height = table;
  if (!art.is_null()) {
    ArticulationSpec spec;
    std::string type = "revolute";
    json axis, origin;
    Section(art, where + ".articulation")
        .get("type", type)
        .get("axis", axis)
        .get("origin", origin)
        .get("cone_half_angle", spec.cone_half_angle)
        .finish();
    if (type == "revolute") {
      spec.joint_type = JointType::Revolute;
    } else if (type == "prismatic") {
      spec.joint_type = JointType::Prismatic;
    } else {
      throw Error(ErrorCode::InvalidArgument, where + ".articulation.type must be revolute or prismatic");
    }
    if (!axis.is_null()) spec.axis = vec3_of(axis, where + ".articulation.axis");
    if (!origin.is_null()) spec.origin = vec3_of(origin, where + ".articulation.origin");
    spec.validate();
    o.articulation = spec;
  }
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct LoadedObject {
  ObjectConfig config;
  Scene scene;
  PointCloud cloud;  // association points
};

class Pipeline {
 public:
  Pipeline(const RunConfig& config, std::filesystem::path out, int jobs)
      : cfg_(config), out_(std::move(out)), jobs_(jobs), model_(HandModel::load(config.resolve(config.hand))) {
    for (std::size_t i = 0; i < cfg_.objects.size(); ++i) {
      const ObjectConfig& oc = cfg_.objects[i];
      if (index_.count(oc.ref.id)) throw Error(ErrorCode::InvalidArgument, "duplicate object id '" + oc.ref.id + "'");
      TriMesh mesh = load_mesh(cfg_.resolve(oc.ref.asset), oc.ref.scale);
      LoadedObject lo{oc, {}, sample_surface(mesh, cfg_.debias.points, cfg_.debias.point_seed)};
      lo.scene = oc.table_height ? Scene::with_table(std::move(mesh), *oc.table_height) : Scene::single(std::move(mesh));
      lo.scene.articulation = oc.articulation;
      if (cfg_.task == Task::Articulation && !oc.articulation) {
        throw Error(ErrorCode::MissingArticulationSpec, "object '" + oc.ref.id + "' has no articulation spec");
      }
      index_[oc.ref.id] = static_cast<int>(objects_.size());
      objects_.push_back(std::move(lo));
    }
    std::filesystem::create_directories(out_);
  }

  RunReport run(std::vector<DemoRecord> records, const std::vector<std::string>& stages) {
    for (const auto& r : records) check_record(r);
    records_ = std::move(records);
    RunReport report;
    int ordinal = 0;
    for (const std::string& stage : stages) {
      StageReport sr;
      sr.name = stage;
      sr.records_in = records_.size();
      const auto t0 = std::chrono::steady_clock::now();
      current_outputs_.clear();
      stem_ = std::to_string(ordinal++) + "-" + stage;
      try {
        run_stage(stage, sr);
      } catch (const StageError&) {
        throw;
      } catch (const Error& e) {
        throw StageError(stage, current_outputs_, "stage '" + stage + "' failed: " + e.what(), e.code());
      } catch (const std::exception& e) {
        throw StageError(stage, current_outputs_, "stage '" + stage + "' failed: " + e.what(), ErrorCode::IoError);
      }
      sr.records_out = records_.size();
      sr.seconds = seconds_since(t0);
      sr.outputs = current_outputs_;
      report.stages.push_back(std::move(sr));
    }

    Manifest m;
    m.hand_hash = model_.config_hash();
    m.dof = model_.dof();
    for (const auto& o : objects_) m.objects.push_back(o.config.ref);
    m.shards = dataset_shards_;
    if (m.shards.empty()) {
      stem_ = "dataset";
      m.shards = write_dataset();
    }
    m.iteration = cfg_.iteration;
    m.metadata = {{"engine_version", kEngineVersion},
                  {"seed", cfg_.seed},
                  {"task", to_string(cfg_.task)},
                  {"stages", stages},
                  {"config_hash", fnv1a(cfg_.to_json().dump())}};
    m.save(out_ / "manifest.json");
    report.manifest = m;
    write_file(out_ / "report.json", report.to_json().dump(2) + "\n");
    return report;
  }

 private:
  void check_record(const DemoRecord& r) const {
    if (!index_.count(r.object.id)) {
      throw Error(ErrorCode::UnknownObject, "record refers to unknown object '" + r.object.id + "'");
    }
    if (r.keyframe.dof() != model_.dof()) throw Error(ErrorCode::DimensionMismatch, "record pose dof does not match hand");
  }

  const LoadedObject& object_of(const DemoRecord& r) const {
    const auto it = index_.find(r.object.id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownObject, "record refers to unknown object '" + r.object.id + "'");
    return objects_[it->second];
  }

  std::vector<ShardEntry> write_dataset() {
    auto entries = write_sharded(records_, model_.config_hash(), model_.dof(), out_, stem_);
    for (const auto& e : entries) current_outputs_.push_back(e.path);
    return entries;
  }

  void run_stage(const std::string& stage, StageReport& sr) {
    if (stage == "synthesize") {
      synthesize();
    } else if (stage == "eval") {
      evaluate();
    } else if (stage == "debias") {
      debias(sr);
      return;
    } else if (stage == "propose") {
      propose(sr);
    } else if (stage == "post-opt") {
      post_opt(sr);
    } else if (stage == "plan") {
      plan(sr);
    } else if (stage == "export") {
      json arr = json::array();
      for (const auto& r : records_) arr.push_back(record_to_json(r));
      write_file(out_ / "export.json", arr.dump(1) + "\n");
      current_outputs_.push_back("export.json");
      return;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown stage '" + stage + "'");
    }
    dataset_shards_ = write_dataset();
  }

  void synthesize() {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      OptimSettings s = cfg_.optim;
      s.seed = derive_seed(cfg_.seed, i);
      const auto results = synthesize_grasps(model_, objects_[i].scene, cfg_.task, cfg_.weights, s, jobs_);
      for (const auto& r : results) {
        DemoRecord d;
        d.task = cfg_.task;
        d.object = objects_[i].config.ref;
        d.keyframe = r.pose;
        d.provenance.generator = "optim";
        d.provenance.seed = r.seed;
        records_.push_back(std::move(d));
      }
    }
  }

  void evaluate() {
    parallel_for(static_cast<int>(records_.size()), jobs_, [&](int i) {
      records_[i].metrics = evaluate_pose(records_[i].keyframe, model_, object_of(records_[i]).scene, cfg_.metrics);
    });
  }

  void debias(StageReport& sr) {
    DebiasStats stats(cfg_.debias.alpha);
    for (const auto& o : objects_) stats.add_object(o.config.ref.id, o.cloud.points);
    std::vector<int> assoc(records_.size());
    parallel_for(static_cast<int>(records_.size()), jobs_, [&](int i) {
      assoc[i] = associate_point(records_[i].keyframe, model_, object_of(records_[i]).cloud);
    });
    for (std::size_t i = 0; i < records_.size(); ++i) update_stats(stats, records_[i].object.id, assoc[i]);
    write_file(out_ / "debias_stats.json", stats.to_json().dump(1) + "\n");
    current_outputs_.push_back("debias_stats.json");

    const auto budgets = object_budget(stats, cfg_.debias.samples, derive_seed(cfg_.seed, 0xdeb1a5));
    conditions_.clear();
    json summary = json::object();
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const std::string& id = objects_[i].config.ref.id;
      const int n = budgets.at(id);
      const ObjectStats& os = stats.object(id);
      summary[id] = {{"records", os.total}, {"tv_to_uniform", tv_to_uniform(os.counts)}, {"budget", n}};
      if (n == 0) continue;
      Conditions c;
      c.indices = sample_conditions(stats, id, n, derive_seed(cfg_.seed, 0x10000 + i));
      c.cloud_file = "cloud-" + id + ".dexpc";
      c.conditions_file = "conditions-" + id + ".json";
      write_point_cloud(objects_[i].cloud, out_ / c.cloud_file);
      json pts = json::array();
      for (int k : c.indices) {
        const Vec3& p = objects_[i].cloud.points[k];
        pts.push_back({p.x(), p.y(), p.z()});
      }
      write_file(out_ / c.conditions_file, json{{"object", id},
                                               {"iteration", cfg_.iteration},
                                               {"indices", c.indices},
                                               {"points", pts}}
                                                   .dump(1) +
                                               "\n");
      current_outputs_.push_back(c.cloud_file);
      current_outputs_.push_back(c.conditions_file);
      conditions_[id] = std::move(c);
    }
    sr.details = summary;
  }

  void propose(StageReport& sr) {
    if (cfg_.proposal.command.empty()) throw Error(ErrorCode::InvalidArgument, "propose stage needs proposal.command");
    if (conditions_.empty()) throw Error(ErrorCode::InvalidArgument, "propose stage needs a preceding debias stage");
    const std::string generator = "gen-iter-" + std::to_string(cfg_.iteration);
    const std::string checkpoint = std::filesystem::absolute(cfg_.resolve(cfg_.proposal.checkpoint)).string();
    std::size_t added = 0;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const std::string& id = objects_[i].config.ref.id;
      const auto it = conditions_.find(id);
      if (it == conditions_.end()) continue;
      const Conditions& c = it->second;
      const std::string shard = "proposals-" + id + ".shard";
      std::ostringstream cmd;
      cmd << resolve_command(cfg_.proposal.command) << " --checkpoint " << shell_quote(checkpoint)
          << " --cloud " << shell_quote((out_ / c.cloud_file).string()) << " --conditions "
          << shell_quote((out_ / c.conditions_file).string()) << " --n " << c.indices.size() << " --seed "
          << derive_seed(cfg_.seed, 0x20000 + i) << " --out " << shell_quote((out_ / shard).string());
      const int rc = std::system(cmd.str().c_str());
      if (rc != 0) {
        throw Error(ErrorCode::StageFailed, "proposal command exited with status " + std::to_string(rc) + " for '" + id + "'");
      }
      current_outputs_.push_back(shard);
      Shard s = read_shard(out_ / shard, model_.config_hash(), model_.dof());
      if (s.records.size() != c.indices.size()) {
        throw Error(ErrorCode::FormatError, "proposal shard for '" + id + "' has " + std::to_string(s.records.size()) +
                                                " records, expected " + std::to_string(c.indices.size()));
      }
      for (std::size_t k = 0; k < s.records.size(); ++k) {
        DemoRecord& r = s.records[k];
        r.task = cfg_.task;
        r.object = objects_[i].config.ref;
        r.condition = c.indices[k];
        r.metrics.reset();
        r.provenance.generator = generator;
        records_.push_back(std::move(r));
        ++added;
      }
    }
    sr.details = {{"proposals", added}};
  }

  void post_opt(StageReport& sr) {
    std::vector<int> todo;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const std::string& g = records_[i].provenance.generator;
      if (g.rfind("gen-iter-", 0) == 0 && (g.size() < 5 || g.compare(g.size() - 5, 5, "-post") != 0)) {
        todo.push_back(static_cast<int>(i));
      }
    }
    parallel_for(static_cast<int>(todo.size()), jobs_, [&](int k) {
      DemoRecord& r = records_[todo[k]];
      const OptimResult res = post_optimize(r.keyframe, object_of(r).scene, model_, cfg_.weights, cfg_.post);
      r.keyframe = res.pose;
      r.metrics.reset();
      r.provenance.generator += "-post";
    });
    sr.details = {{"refined", todo.size()}};
  }

  void plan(StageReport& sr) {
    std::vector<int> infeasible(records_.size(), 0), goal_bad(records_.size(), 0);
    parallel_for(static_cast<int>(records_.size()), jobs_, [&](int i) {
      DemoRecord& r = records_[i];
      const LoadedObject& o = object_of(r);
      const HandPose start = sample_initializations(model_, o.scene, 1, derive_seed(cfg_.seed, 0x30000 + i))[0];
      const ReachPlan reach = plan_reach(start, r.keyframe, o.scene, model_, cfg_.plan);
      const Trajectory post = generate_post_grasp(
          r.keyframe, r.task == Task::Articulation ? PostMotion::Articulate : PostMotion::Lift, o.config.articulation,
          model_, cfg_.plan);
      Trajectory t = reach.trajectory;
      t.frames.insert(t.frames.end(), post.frames.begin() + 1, post.frames.end());
      t.stages.insert(t.stages.end(), post.stages.begin() + 1, post.stages.end());
      r.trajectory = std::move(t);
      infeasible[i] = reach.feasible ? 0 : 1;
      // a penetrating keyframe makes the reach infeasible whatever the path does
      goal_bad[i] = frame_penetration(r.keyframe, model_, o.scene) > cfg_.plan.tolerance ? 1 : 0;
    });
    std::size_t bad = 0, goal = 0;
    for (std::size_t i = 0; i < infeasible.size(); ++i) {
      bad += infeasible[i];
      goal += goal_bad[i];
    }
    sr.details = {{"reach_infeasible", bad}, {"keyframe_penetrating", goal}};
  }

  // "{config_dir}" expands to the absolute directory of the config file
  std::string resolve_command(std::string command) const {
    const std::string key = "{config_dir}";
    const std::string dir = std::filesystem::absolute(cfg_.base_dir).lexically_normal().string();
    for (auto pos = command.find(key); pos != std::string::npos; pos = command.find(key, pos + dir.size())) {
      command.replace(pos, key.size(), dir);
    }
    return command;
  }

  struct Conditions {
    std::vector<int> indices;
    std::string cloud_file;
    std::string conditions_file;
  };

  const RunConfig& cfg_;
  std::filesystem::path out_;
  int jobs_;
  HandModel model_;
  std::vector<LoadedObject> objects_;
  std::map<std::string, int> index_;
  std::vector<DemoRecord> records_;
  std::vector<ShardEntry> dataset_shards_;
  std::map<std::string, Conditions> conditions_;
  std::vector<std::string> current_outputs_;
  std::string stem_;
};

}  // namespace

const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> stages = {"synthesize", "eval", "debias", "propose", "post-opt", "plan", "export"};
  return stages;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

RunConfig RunConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "run config must be a JSON object");
  RunConfig c;
  c.base_dir = base_dir;
  std::string task = "grasp";
  json objects, weights, optim, post, plan, metrics, debias, proposal, stages;
  Section(doc, "config")
      .get("hand", c.hand)
      .get("objects", objects)
      .get("task", task)
      .get("seed", c.seed)
      .get("iteration", c.iteration)
      .get("weights", weights)
      .get("optim", optim)
      .get("post", post)
      .get("plan", plan)
      .get("metrics", metrics)
      .get("debias", debias)
      .get("proposal", proposal)
      .get("stages", stages)
      .finish();
  if (c.hand.empty()) throw Error(ErrorCode::InvalidArgument, "config needs a hand path");
  c.task = task_from_string(task);
  if (c.task == Task::Post) throw Error(ErrorCode::InvalidArgument, "config task must be grasp or articulation");
  if (!objects.is_array() || objects.empty()) throw Error(ErrorCode::InvalidArgument, "config needs a nonempty objects array");
  for (std::size_t i = 0; i < objects.size(); ++i) c.objects.push_back(read_object(objects[i], i));
  read_weights(weights, c.weights);
  read_optim(optim, "optim", c.optim);
  read_optim(post, "post", c.post);
  read_plan(plan, c.plan);
  read_metrics(metrics, c.metrics);
  Section(debias, "debias")
      .get("alpha", c.debias.alpha)
      .get("points", c.debias.points)
      .get("point_seed", c.debias.point_seed)
      .get("samples", c.debias.samples)
      .finish();
  if (!(c.debias.alpha >= 0.0) || c.debias.points < 1 || c.debias.samples < 0) {
    throw Error(ErrorCode::InvalidArgument, "debias settings out of range");
  }
  Section(proposal, "proposal").get("command", c.proposal.command).get("checkpoint", c.proposal.checkpoint).finish();
  if (!stages.is_null()) {
    try {
      c.stages = stages.get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "config stages must be an array of names");
    }
  }
  for (const auto& s : c.stages) {
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown stage '" + s + "'");
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  return from_json(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

json RunConfig::to_json() const {
  json objs = json::array();
  for (const auto& o : objects) {
    json j = {{"id", o.ref.id}, {"asset", o.ref.asset}, {"scale", o.ref.scale}};
    if (o.table_height) j["table_height"] = *o.table_height;
    if (o.articulation) {
      const auto& a = *o.articulation;
      j["articulation"] = {{"type", a.joint_type == JointType::Revolute ? "revolute" : "prismatic"},
                           {"axis", {a.axis.x(), a.axis.y(), a.axis.z()}},
                           {"origin", {a.origin.x(), a.origin.y(), a.origin.z()}},
                           {"cone_half_angle", a.cone_half_angle}};
    }
    objs.push_back(j);
  }
  return {{"hand", hand},
          {"objects", objs},
          {"task", to_string(task)},
          {"seed", seed},
          {"iteration", iteration},
          {"weights", weights_json(weights)},
          {"optim", optim_json(optim)},
          {"post", optim_json(post)},
          {"plan", plan_json(plan)},
          {"metrics", metrics_json(metrics)},
          {"debias",
           {{"alpha", debias.alpha}, {"points", debias.points}, {"point_seed", debias.point_seed}, {"samples", debias.samples}}},
          {"proposal", {{"command", proposal.command}, {"checkpoint", proposal.checkpoint}}},
          {"stages", stages}};
}

json RunReport::to_json() const {
  json st = json::array();
  for (const auto& s : stages) {
    st.push_back({{"stage", s.name},
                  {"records_in", s.records_in},
                  {"records_out", s.records_out},
                  {"seconds", s.seconds},
                  {"outputs", s.outputs},
                  {"details", s.details}});
  }
  return {{"stages", st}, {"total_records", manifest.total_records()}};
}

RunReport run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir, int jobs,
                       std::vector<DemoRecord> input, const std::vector<std::string>* stages) {
  const std::vector<std::string>& list = stages ? *stages : config.stages;
  for (const auto& s : list) {
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown stage '" + s + "'");
    }
  }
  Pipeline p(config, out_dir, jobs);
  return p.run(std::move(input), list);
}

std::vector<DemoRecord> load_records(const std::filesystem::path& path, const HandModel& model) {
  if (path.extension() == ".json") {
    const Manifest m = Manifest::load(path);
    if (m.hand_hash != model.config_hash() || m.dof != model.dof()) {
      throw Error(ErrorCode::DimensionMismatch, path.string() + ": manifest was written for a different hand");
    }
    return m.read_records(path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  }
  return read_shard(path, model.config_hash(), model.dof()).records;
}

}  // namespace dex
