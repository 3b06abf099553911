#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "clothservo/clothsim.hpp"
#include "clothservo/dictionary.hpp"
#include "clothservo/perception.hpp"
#include "clothservo/recording.hpp"

namespace clothservo {

/// Axis-aligned box of admissible gripper configurations.
struct Workspace {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  GripperConfig clamp(const GripperConfig& g) const;
  bool contains(const GripperConfig& g, double slack = 0.0) const;
};

/// Simulated bench: a square cloth hanging from two grippers in front of a camera.
struct Scene {
  int rows = 17;
  int cols = 17;
  double cloth_size = 0.3;  ///< m, side length
  double spread = 1.02;        ///< nominal gripper distance over cloth width
  double reach_out = 0.045;    ///< m, recording range past the spread corners
  double reach_in = 0.10;      ///< m, recording range toward the center
  double reach_offset = 0.0;   ///< m, recording range in height and depth
  double crumple_jitter = 0.004;  ///< m, out-of-plane vertex noise of crumpled starts
  SimParams sim;
  CameraModel camera;
  FeatureSpec features;

  double frame_rate() const { return 1.0 / sim.frame_time(); }
  /// Grippers at the two top corners of the flat, fully spread cloth.
  GripperConfig nominal() const;
  /// Range used for random recordings.
  Workspace workspace() const;
  /// Unsettled flat cloth with pins at the nominal grippers.
  ClothState rest_state() const;

  /// A second "subject": softer or stiffer cloth and a slightly displaced camera.
  Scene variant(double stiffness_scale, const Vec3& camera_offset) const;
};

/// Drives grippers to `target` and runs `frames` control frames.
ClothState settle(ClothState state, const GripperConfig& target, const SimParams& sim, int frames);

/// The spread cloth after settling: goal of the flattening task.
ClothState flat_state(const Scene& scene, int frames = 90);

/// Seeded crumpled start: grippers pushed inward with random height/depth
/// offsets, vertices jittered out of plane, then settled.
ClothState crumpled_state(const Scene& scene, std::uint64_t seed, int frames = 90);

/// Smooth random waypoint trajectory through the workspace, starting at the
/// nominal configuration; one configuration per frame.
std::vector<GripperConfig> random_trajectory(const Scene& scene, int frames, std::uint64_t seed,
                                             int frames_per_waypoint = 30);

/// Simulates a random trajectory and returns rendered frames and commands.
struct SimulatedRun {
  std::vector<Image> frames;
  std::vector<GripperConfig> configs;
};
SimulatedRun simulate_trajectory(const Scene& scene, const std::vector<GripperConfig>& trajectory);

/// Writes frames/NNNNNN.png and a log next to them; returns the recording.
Recording write_recording(const SimulatedRun& run, double frame_rate, const std::filesystem::path& dir,
                          const std::string& log_name = "recording.jsonl");

/// Features of an in-memory run.
FeatureTrack make_track(const SimulatedRun& run, const FeatureSpec& spec, double frame_rate);

/// Sinusoidal tug on a bottom corner patch (the human's grasp).
PerturbationScript corner_tug(const Scene& scene, const Vec3& amplitude, double period, long start, long end);

}  // namespace clothservo
