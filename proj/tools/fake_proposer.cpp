// Stand-in for the external proposal generator. Places the palm a fixed
// offset outside each condition point, aimed along the inward normal, with
// a random roll and jittered joints. Speaks the proposal-command protocol.

#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <Eigen/Geometry>
#include <json.hpp>

#include "dex/dataset.hpp"
#include "dex/error.hpp"
#include "dex/rotation.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fake proposal generator"};
  std::string hand_path, checkpoint, cloud_path, conditions_path, out;
  int n = 0;
  std::uint64_t seed = 0;
  app.add_option("--hand", hand_path)->required();
  app.add_option("--checkpoint", checkpoint)->required();
  app.add_option("--cloud", cloud_path)->required();
  app.add_option("--conditions", conditions_path)->required();
  app.add_option("--n", n)->required();
  app.add_option("--seed", seed)->required();
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    if (!std::filesystem::exists(checkpoint)) {
      throw dex::Error(dex::ErrorCode::IoError, "missing checkpoint '" + checkpoint + "'");
    }
    const auto ckpt = nlohmann::json::parse(dex::read_file(checkpoint));
    const double offset = ckpt.value("offset", 0.15);
    const double jitter = ckpt.value("joint_jitter", 0.05);

    const dex::HandModel hand = dex::HandModel::load(hand_path);
    const dex::PointCloud cloud = dex::read_point_cloud(cloud_path);
    const auto cond = nlohmann::json::parse(dex::read_file(conditions_path));
    const auto indices = cond.at("indices").get<std::vector<int>>();
    if (static_cast<int>(indices.size()) != n) throw dex::Error(dex::ErrorCode::InvalidArgument, "--n disagrees with conditions");
    if (!cloud.has_normals()) throw dex::Error(dex::ErrorCode::FormatError, "cloud has no normals");

    const dex::HandPose rest = hand.mid_range_pose();
    const dex::HandPlacement local = dex::forward_kinematics(hand, rest);
    const dex::Vec3 heading = dex::heading_direction(local);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> roll(-3.141592653589793, 3.141592653589793);
    std::normal_distribution<double> noise(0.0, jitter);

    std::vector<dex::DemoRecord> records;
    for (int k : indices) {
      if (k < 0 || k >= static_cast<int>(cloud.size())) throw dex::Error(dex::ErrorCode::InvalidArgument, "condition out of range");
      const dex::Vec3 aim = -cloud.normals[k];
      const dex::Vec3 palm = cloud.points[k] + offset * cloud.normals[k];
      const dex::Mat3 r = Eigen::AngleAxisd(roll(rng), aim).toRotationMatrix() *
                          Eigen::Quaterniond::FromTwoVectors(heading, aim).toRotationMatrix();
      dex::DemoRecord d;
      d.keyframe = rest;
      d.keyframe.euler = dex::matrix_to_euler_xyz(r);
      d.keyframe.translation = palm - r * local.palm_center;
      for (int j = 0; j < hand.dof(); ++j) d.keyframe.joints[j] += noise(rng);
      d.condition = k;
      d.provenance.generator = "gen-iter-" + std::to_string(cond.value("iteration", 0));
      d.provenance.seed = seed;
      records.push_back(std::move(d));
    }
    dex::write_shard(records, hand.config_hash(), hand.dof(), out);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
