#include "dex/dataset.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "dex/error.hpp"

namespace dex {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void pose(const HandPose& p) {
    for (int k = 0; k < 3; ++k) f64(p.translation[k]);
    for (int k = 0; k < 3; ++k) f64(p.euler[k]);
    for (int k = 0; k < p.dof(); ++k) f64(p.joints[k]);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(*p_++);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p_[i])) << (8 * i);
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p_[i])) << (8 * i);
    p_ += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  HandPose pose(int dof) {
    HandPose p(dof);
    for (int k = 0; k < 3; ++k) p.translation[k] = f64();
    for (int k = 0; k < 3; ++k) p.euler[k] = f64();
    for (int k = 0; k < dof; ++k) p.joints[k] = f64();
    return p;
  }
  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw Error(ErrorCode::FormatError, "shard record runs past the payload");
  }
  const char* p_;
  const char* end_;
};

std::uint32_t crc_of(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

bool same(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_pose(const HandPose& a, const HandPose& b) {
  if (a.dof() != b.dof()) return false;
  for (int k = 0; k < 3; ++k) {
    if (!same(a.translation[k], b.translation[k]) || !same(a.euler[k], b.euler[k])) return false;
  }
  for (int k = 0; k < a.dof(); ++k) {
    if (!same(a.joints[k], b.joints[k])) return false;
  }
  return true;
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::FormatError, std::string("bad hex value for ") + what);
  return v;
}

}  // namespace

bool identical(const DemoRecord& a, const DemoRecord& b) {
  if (a.task != b.task || a.object.id != b.object.id || a.object.asset != b.object.asset ||
      !same(a.object.scale, b.object.scale)) {
    return false;
  }
  if (!same_pose(a.keyframe, b.keyframe)) return false;
  if (a.condition != b.condition) return false;
  if (a.provenance.generator != b.provenance.generator || a.provenance.seed != b.provenance.seed ||
      a.provenance.engine_version != b.provenance.engine_version) {
    return false;
  }
  if (a.metrics.has_value() != b.metrics.has_value()) return false;
  if (a.metrics) {
    const auto &x = *a.metrics, &y = *b.metrics;
    if (!same(x.q1, y.q1) || !same(x.max_penetration, y.max_penetration) || x.contact_count != y.contact_count ||
        x.feasible != y.feasible) {
      return false;
    }
  }
  if (a.trajectory.has_value() != b.trajectory.has_value()) return false;
  if (a.trajectory) {
    const auto &x = *a.trajectory, &y = *b.trajectory;
    if (!same(x.dt, y.dt) || x.size() != y.size() || x.stages != y.stages) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!same_pose(x.frames[i], y.frames[i])) return false;
    }
  }
  return true;
}

std::string encode_shard(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof) {
  if (records.size() > kMaxShardRecords) {
    throw Error(ErrorCode::InvalidArgument, "a shard holds at most " + std::to_string(kMaxShardRecords) + " records");
  }
  if (dof < 0) throw Error(ErrorCode::InvalidArgument, "shard dof must be nonnegative");
  Writer w;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DemoRecord& r = records[i];
    const std::string where = "record " + std::to_string(i);
    if (r.task != Task::Grasp && r.task != Task::Articulation) {
      throw Error(ErrorCode::InvalidArgument, where + " task must be grasp or articulation");
    }
    if (r.keyframe.dof() != dof) throw Error(ErrorCode::DimensionMismatch, where + " pose dof does not match the shard");
    w.u8(static_cast<std::uint8_t>(r.task));
    w.str(r.object.id);
    w.str(r.object.asset);
    w.f64(r.object.scale);
    w.pose(r.keyframe);
    w.u8(r.condition ? 1 : 0);
    w.i32(r.condition.value_or(-1));
    w.u8(r.metrics ? 1 : 0);
    if (r.metrics) {
      w.f64(r.metrics->q1);
      w.f64(r.metrics->max_penetration);
      w.i32(r.metrics->contact_count);
      w.u8(r.metrics->feasible ? 1 : 0);
    }
    w.str(r.provenance.generator);
    w.u64(r.provenance.seed);
    w.str(r.provenance.engine_version);
    if (r.trajectory) {
      const Trajectory& t = *r.trajectory;
      if (t.stages.size() != t.frames.size()) {
        throw Error(ErrorCode::DimensionMismatch, where + " trajectory stage tags do not match frames");
      }
      w.u32(static_cast<std::uint32_t>(t.size()));
      w.f64(t.dt);
      for (std::size_t f = 0; f < t.size(); ++f) {
        if (t.frames[f].dof() != dof) {
          throw Error(ErrorCode::DimensionMismatch, where + " trajectory frame dof does not match the shard");
        }
        w.u8(static_cast<std::uint8_t>(t.stages[f]));
        w.pose(t.frames[f]);
      }
    } else {
      w.u32(0);
    }
  }
  const std::string payload = std::move(w.bytes());

  Writer h;
  h.bytes() = "DEX1";
  h.u32(kShardVersion);
  h.u64(records.size());
  h.u64(hand_hash);
  h.u32(static_cast<std::uint32_t>(dof));
  h.u64(payload.size());
  h.u32(crc_of(payload.data(), payload.size()));
  return h.bytes() + payload;
}

Shard decode_shard(const std::string& bytes, std::optional<std::uint64_t> expected_hash, std::optional<int> expected_dof) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "DEX1") != 0) {
    if (bytes.size() < 4 && std::string("DEX1").compare(0, bytes.size(), bytes) == 0) {
      throw Error(ErrorCode::ChecksumMismatch, "shard is truncated inside the header");
    }
    throw Error(ErrorCode::FormatError, "not a DEX1 shard");
  }
  if (bytes.size() < kShardHeaderSize) throw Error(ErrorCode::ChecksumMismatch, "shard is truncated inside the header");
  Reader h(bytes.data() + 4, kShardHeaderSize - 4);
  Shard s;
  s.header.version = h.u32();
  if (s.header.version != kShardVersion) {
    throw Error(ErrorCode::VersionMismatch, "shard version " + std::to_string(s.header.version) + " is not supported (expected " +
                                                std::to_string(kShardVersion) + ")");
  }
  s.header.count = h.u64();
  s.header.hand_hash = h.u64();
  s.header.dof = h.u32();
  s.header.payload_size = h.u64();
  s.header.crc32 = h.u32();
  if (bytes.size() - kShardHeaderSize != s.header.payload_size) {
    throw Error(ErrorCode::ChecksumMismatch, "shard payload is " + std::to_string(bytes.size() - kShardHeaderSize) +
                                                 " bytes, header says " + std::to_string(s.header.payload_size));
  }
  const char* payload = bytes.data() + kShardHeaderSize;
  if (crc_of(payload, s.header.payload_size) != s.header.crc32) {
    throw Error(ErrorCode::ChecksumMismatch, "shard payload checksum does not match");
  }
  if (expected_hash && *expected_hash != s.header.hand_hash) {
    throw Error(ErrorCode::DimensionMismatch, "shard was written for hand " + hex64(s.header.hand_hash) +
                                                  ", expected " + hex64(*expected_hash));
  }
  if (expected_dof && *expected_dof != static_cast<int>(s.header.dof)) {
    throw Error(ErrorCode::DimensionMismatch, "shard pose dof " + std::to_string(s.header.dof) + " does not match hand dof " +
                                                  std::to_string(*expected_dof));
  }
  if (s.header.count > kMaxShardRecords) throw Error(ErrorCode::FormatError, "shard record count exceeds the limit");

  const int dof = static_cast<int>(s.header.dof);
  Reader r(payload, s.header.payload_size);
  std::vector<DemoRecord> records;
  records.reserve(s.header.count);
  for (std::uint64_t i = 0; i < s.header.count; ++i) {
    DemoRecord d;
    const std::uint8_t task = r.u8();
    if (task > 1) throw Error(ErrorCode::FormatError, "record " + std::to_string(i) + " has an unknown task");
    d.task = static_cast<Task>(task);
    d.object.id = r.str();
    d.object.asset = r.str();
    d.object.scale = r.f64();
    d.keyframe = r.pose(dof);
    const std::uint8_t has_condition = r.u8();
    const std::int32_t condition = r.i32();
    if (has_condition > 1) throw Error(ErrorCode::FormatError, "bad condition flag");
    if (has_condition) d.condition = condition;
    const std::uint8_t has_metrics = r.u8();
    if (has_metrics > 1) throw Error(ErrorCode::FormatError, "bad metrics flag");
    if (has_metrics) {
      MetricReport m;
      m.q1 = r.f64();
      m.max_penetration = r.f64();
      m.contact_count = r.i32();
      const std::uint8_t feasible = r.u8();
      if (feasible > 1) throw Error(ErrorCode::FormatError, "bad feasibility flag");
      m.feasible = feasible == 1;
      d.metrics = m;
    }
    d.provenance.generator = r.str();
    d.provenance.seed = r.u64();
    d.provenance.engine_version = r.str();
    const std::uint32_t frames = r.u32();
    if (frames > 0) {
      Trajectory t;
      t.dt = r.f64();
      t.frames.reserve(frames);
      for (std::uint32_t f = 0; f < frames; ++f) {
        const std::uint8_t stage = r.u8();
        if (stage > 2) throw Error(ErrorCode::FormatError, "unknown trajectory stage tag");
        t.stages.push_back(static_cast<Stage>(stage));
        t.frames.push_back(r.pose(dof));
      }
      d.trajectory = std::move(t);
    }
    records.push_back(std::move(d));
  }
  if (!r.done()) throw Error(ErrorCode::FormatError, "shard payload has trailing bytes");
  s.records = std::move(records);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::uint32_t write_shard(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof,
                          const std::filesystem::path& path) {
  const std::string bytes = encode_shard(records, hand_hash, dof);
  write_file(path, bytes);
  return Reader(bytes.data() + 36, 4).u32();
}

Shard read_shard(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash,
                 std::optional<int> expected_dof) {
  try {
    return decode_shard(read_file(path), expected_hash, expected_dof);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

nlohmann::json record_to_json(const DemoRecord& r) {
  auto pose_json = [](const HandPose& p) {
    return nlohmann::json{{"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                          {"euler", {p.euler.x(), p.euler.y(), p.euler.z()}},
                          {"joints", std::vector<double>(p.joints.data(), p.joints.data() + p.dof())}};
  };
  nlohmann::json j;
  j["task"] = to_string(r.task);
  j["object"] = {{"id", r.object.id}, {"asset", r.object.asset}, {"scale", r.object.scale}};
  j["keyframe"] = pose_json(r.keyframe);
  j["condition"] = r.condition ? nlohmann::json(*r.condition) : nlohmann::json(nullptr);
  if (r.metrics) {
    j["metrics"] = {{"q1", r.metrics->q1},
                    {"max_penetration", r.metrics->max_penetration},
                    {"contact_count", r.metrics->contact_count},
                    {"feasible", r.metrics->feasible}};
  } else {
    j["metrics"] = nullptr;
  }
  j["provenance"] = {{"generator", r.provenance.generator},
                     {"seed", r.provenance.seed},
                     {"engine_version", r.provenance.engine_version}};
  if (r.trajectory) {
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t f = 0; f < r.trajectory->size(); ++f) {
      nlohmann::json fj = pose_json(r.trajectory->frames[f]);
      fj["stage"] = to_string(r.trajectory->stages[f]);
      frames.push_back(fj);
    }
    j["trajectory"] = {{"dt", r.trajectory->dt}, {"frames", frames}};
  } else {
    j["trajectory"] = nullptr;
  }
  return j;
}

std::uint64_t Manifest::total_records() const {
  std::uint64_t n = 0;
  for (const auto& s : shards) n += s.records;
  return n;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : objects) objs.push_back({{"id", o.id}, {"asset", o.asset}, {"scale", o.scale}});
  nlohmann::json sh = nlohmann::json::array();
  for (const auto& s : shards) sh.push_back({{"path", s.path}, {"records", s.records}, {"crc32", hex32(s.crc32)}});
  return {{"format", "DEX1"},
          {"version", kShardVersion},
          {"hand_hash", hex64(hand_hash)},
          {"dof", dof},
          {"iteration", iteration},
          {"objects", objs},
          {"shards", sh},
          {"total_records", total_records()},
          {"metadata", metadata}};
}

Manifest Manifest::from_json(const nlohmann::json& doc) {
  try {
    Manifest m;
    if (doc.at("format").get<std::string>() != "DEX1") throw Error(ErrorCode::FormatError, "manifest format is not DEX1");
    if (doc.at("version").get<std::uint32_t>() != kShardVersion) {
      throw Error(ErrorCode::VersionMismatch, "manifest version is not supported");
    }
    m.hand_hash = parse_hex(doc.at("hand_hash").get<std::string>(), "hand_hash");
    m.dof = doc.at("dof").get<int>();
    m.iteration = doc.at("iteration").get<int>();
    for (const auto& o : doc.at("objects")) {
      m.objects.push_back({o.at("id").get<std::string>(), o.at("asset").get<std::string>(), o.at("scale").get<double>()});
    }
    for (const auto& s : doc.at("shards")) {
      m.shards.push_back({s.at("path").get<std::string>(), s.at("records").get<std::uint64_t>(),
                          static_cast<std::uint32_t>(parse_hex(s.at("crc32").get<std::string>(), "crc32"))});
    }
    if (doc.contains("metadata")) m.metadata = doc.at("metadata");
    if (doc.contains("total_records") && doc.at("total_records").get<std::uint64_t>() != m.total_records()) {
      throw Error(ErrorCode::FormatError, "manifest total does not match its shard counts");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed manifest: ") + e.what());
  }
}

void Manifest::save(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

Manifest Manifest::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

std::vector<DemoRecord> Manifest::read_records(const std::filesystem::path& dir) const {
  std::vector<DemoRecord> out;
  for (const auto& entry : shards) {
    Shard s = read_shard(dir / entry.path, hand_hash, dof);
    if (s.header.crc32 != entry.crc32) {
      throw Error(ErrorCode::ChecksumMismatch, entry.path + ": checksum differs from the manifest");
    }
    if (s.header.count != entry.records) {
      throw Error(ErrorCode::FormatError, entry.path + ": record count differs from the manifest");
    }
    for (auto& r : s.records) out.push_back(std::move(r));
  }
  return out;
}

std::vector<ShardEntry> write_sharded(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof,
                                      const std::filesystem::path& dir, const std::string& stem) {
  std::vector<ShardEntry> out;
  std::size_t begin = 0;
  int part = 0;
  do {
    const std::size_t end = std::min(records.size(), begin + kMaxShardRecords);
    const std::vector<DemoRecord> chunk(records.begin() + begin, records.begin() + end);
    char name[32];
    std::snprintf(name, sizeof name, "-%04d.shard", part++);
    const std::string file = stem + name;
    const std::uint32_t crc = write_shard(chunk, hand_hash, dof, dir / file);
    out.push_back({file, chunk.size(), crc});
    begin = end;
  } while (begin < records.size());
  return out;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::string text = "DEXPC 1\n" + std::to_string(cloud.size()) + " " + (cloud.has_normals() ? "1" : "0") + "\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x(), p.y(), p.z());
    text += buf;
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g", n.x(), n.y(), n.z());
      text += buf;
    }
    text += '\n';
  }
  write_file(path, text);
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  int normals = 0;
  if (!(in >> magic >> version) || magic != "DEXPC") throw Error(ErrorCode::FormatError, path.string() + ": not a DEXPC cloud");
  if (version != 1) throw Error(ErrorCode::VersionMismatch, path.string() + ": unsupported cloud version");
  if (!(in >> count >> normals) || normals < 0 || normals > 1) {
    throw Error(ErrorCode::FormatError, path.string() + ": bad cloud header");
  }
  std::vector<Vec3> pts(count), nrm(normals ? count : 0);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> pts[i].x() >> pts[i].y() >> pts[i].z())) {
      throw Error(ErrorCode::FormatError, path.string() + ": cloud ends early");
    }
    if (normals && !(in >> nrm[i].x() >> nrm[i].y() >> nrm[i].z())) {
      throw Error(ErrorCode::FormatError, path.string() + ": cloud ends early");
    }
  }
  return PointCloud(std::move(pts), std::move(nrm));
}

}  // namespace dex
