#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dex/energy.hpp"
#include "dex/geometry.hpp"
#include "dex/hand_model.hpp"
#include "dex/metrics.hpp"
#include "dex/trajectory.hpp"

namespace dex {

inline constexpr char kEngineVersion[] = "dexengine 0.1.0";
inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::size_t kMaxShardRecords = 65536;
inline constexpr std::size_t kShardHeaderSize = 40;

struct ObjectRef {
  std::string id;
  std::string asset;
  double scale = 1.0;
};

struct Provenance {
  std::string generator = "optim";  // "optim" or "gen-iter-<k>", optionally suffixed "-post"
  std::uint64_t seed = 0;
  std::string engine_version = kEngineVersion;
};

struct DemoRecord {
  Task task = Task::Grasp;
  ObjectRef object;
  HandPose keyframe;
  std::optional<Trajectory> trajectory;
  std::optional<std::int32_t> condition;
  std::optional<MetricReport> metrics;  // per-pose fields only
  Provenance provenance;
};

/// Field-by-field equality with doubles compared by bit pattern.
bool identical(const DemoRecord& a, const DemoRecord& b);

struct ShardHeader {
  std::uint32_t version = kShardVersion;
  std::uint64_t count = 0;
  std::uint64_t hand_hash = 0;
  std::uint32_t dof = 0;
  std::uint64_t payload_size = 0;
  std::uint32_t crc32 = 0;
};

struct Shard {
  ShardHeader header;
  std::vector<DemoRecord> records;
};

/// Layout, all little-endian:
///   "DEX1" | version u32 | count u64 | hand hash u64 | dof u32 |
///   payload bytes u64 | crc32(payload) u32 | payload
std::string encode_shard(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof);

/// Validates the whole buffer before decoding any record. `expected_hash`
/// and `expected_dof` reject shards written for another hand.
Shard decode_shard(const std::string& bytes, std::optional<std::uint64_t> expected_hash = std::nullopt,
                   std::optional<int> expected_dof = std::nullopt);

/// Returns the payload CRC32 stored in the header.
std::uint32_t write_shard(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof,
                          const std::filesystem::path& path);
Shard read_shard(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash = std::nullopt,
                 std::optional<int> expected_dof = std::nullopt);

nlohmann::json record_to_json(const DemoRecord& record);

struct ShardEntry {
  std::string path;  // relative to the manifest directory
  std::uint64_t records = 0;
  std::uint32_t crc32 = 0;
};

/// Index of one dataset iteration. Carries no timestamps so identical runs
/// produce identical documents.
struct Manifest {
  std::uint64_t hand_hash = 0;
  int dof = 0;
  std::vector<ObjectRef> objects;
  std::vector<ShardEntry> shards;
  int iteration = 0;
  nlohmann::json metadata = nlohmann::json::object();

  std::uint64_t total_records() const;
  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);
  /// Reads every shard under `dir`, checking counts, checksums and the hand.
  std::vector<DemoRecord> read_records(const std::filesystem::path& dir) const;
};

/// Splits into shards of at most kMaxShardRecords named <stem>-NNNN.shard.
std::vector<ShardEntry> write_sharded(const std::vector<DemoRecord>& records, std::uint64_t hand_hash, int dof,
                                      const std::filesystem::path& dir, const std::string& stem);

/// Text point cloud: "DEXPC 1", then "<count> <has_normals>", then one point
/// per line as x y z [nx ny nz] with round-trip precision.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_point_cloud(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace dex
