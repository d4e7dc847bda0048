#pragma once

#include <cstdint>
#include <vector>

#include "dex/energy.hpp"
#include "dex/hand_model.hpp"
#include "dex/scene.hpp"

namespace dex {

struct OptimSettings {
  int steps = 6000;
  double step_size = 0.01;   // initial, decays on a half cosine to zero
  double noise_scale = 0.005;  // initial std of the exploration noise
  int restarts = 64;
  std::uint64_t seed = 0;
  int resample_contacts_every = 1;
  // per-block multipliers on step size and noise
  double translation_scale = 1.0;
  double rotation_scale = 0.5;
  double joint_scale = 1.0;
  double noise_decay_power = 2.0;  // noise follows the step schedule raised to this power
  double rms_decay = 0.99;
  int trace_every = 10;

  void validate() const;

  /// Defaults for refining external proposals: 100 steps, no noise, root
  /// blocks at 0.1x the joint step.
  static OptimSettings post_defaults();
};

struct OptimResult {
  HandPose pose;                      // best-so-far
  std::vector<double> energy_trace;   // totals every trace_every steps, plus the last
  EnergyReport report;                // at `pose`
  double initial_energy = 0.0;
  double best_energy = 0.0;
  int best_step = 0;
  int init_index = 0;
  std::uint64_t seed = 0;
};

/// Palms on the object's bounding sphere inflated by 1.25, each aimed at the
/// bounding-box center with a random roll; joints at mid-range. Placements
/// whose spheres penetrate a non-target scene mesh are redrawn (bounded).
std::vector<HandPose> sample_initializations(const HandModel& model, const Scene& scene, int count,
                                             std::uint64_t seed);

OptimResult optimize_grasp(const HandPose& init, Task task, const Scene& scene, const HandModel& model,
                           const EnergyWeights& weights, const OptimSettings& settings);

/// Minimizes the post-task energy (no force-closure or task-wrench term).
OptimResult post_optimize(const HandPose& proposal, const Scene& scene, const HandModel& model,
                          const EnergyWeights& weights, const OptimSettings& settings = OptimSettings::post_defaults());

/// Samples `settings.restarts` initializations and optimizes each on up to
/// `jobs` threads. Restart i uses the seed derive_seed(settings.seed, i), so
/// the output does not depend on `jobs`.
std::vector<OptimResult> synthesize_grasps(const HandModel& model, const Scene& scene, Task task,
                                           const EnergyWeights& weights, const OptimSettings& settings, int jobs);

}  // namespace dex
