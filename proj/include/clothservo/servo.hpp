#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clothservo/clothsim.hpp"
#include "clothservo/dictionary.hpp"
#include "clothservo/features.hpp"
#include "clothservo/sparse.hpp"

namespace clothservo {

enum class GoalMode { Single, Hidden, Sequential };

std::string to_string(GoalMode mode);

/// Goal feature vectors. Single mode has one target; hidden mode accepts any of
/// the targets; sequential mode visits them, preferring low cost.
struct GoalSpec {
  GoalMode mode = GoalMode::Single;
  std::vector<FeatureVector> targets;
  std::vector<double> costs;         ///< sequential mode only; empty means all zero
  double satisfaction_radius = 0.0;  ///< sequential mode: feature distance that counts as reached

  void validate() const;
  static GoalSpec single(FeatureVector target);
};

struct ServoConfig {
  double gain = 0.5;             ///< lambda
  int max_steps = 400;
  double stop_epsilon = 0.0;     ///< absolute feature-error stop threshold
  double stop_fraction = 0.05;   ///< stop threshold relative to the initial error
  double velocity_clamp = 0.1;   ///< m/s, bound on |v|_inf

  void validate() const;
};

struct ControlOutput {
  Eigen::VectorXd v;            ///< commanded velocity after clamping
  Eigen::VectorXd v_unclamped;  ///< -gain * reconstructed velocity
  int target = -1;              ///< index into GoalSpec::targets, -1 when complete
  double error = 0.0;           ///< |s - s_target|
  bool complete = false;        ///< sequential goals exhausted
  SparseCode code;
};

/// Scales v so that |v|_inf <= limit, keeping its direction.
Eigen::VectorXd clamp_velocity(const Eigen::VectorXd& v, double limit);

/// Maps feature error to gripper velocity through the feedback dictionary. Keeps
/// the remaining-target set of sequential goals between calls.
class FeedbackController {
 public:
  FeedbackController(const FeedbackDictionary& dict, GoalSpec goal, SparseSolverConfig sparse,
                     ServoConfig servo);

  ControlOutput control_step(const FeatureVector& s_now);

  /// Reconstructed dictionary velocity for a feedback s_now - target (no gain, no clamp).
  Eigen::VectorXd interaction(const FeatureVector& feedback, SparseCode* code = nullptr) const;

  const std::vector<int>& remaining() const { return remaining_; }
  const GoalSpec& goal() const { return goal_; }

 private:
  const FeedbackDictionary& dict_;
  GoalSpec goal_;
  SparseSolverConfig sparse_;
  ServoConfig servo_;
  SparseCoder coder_;
  Eigen::MatrixXd velocities_;
  std::vector<int> remaining_;
};

/// Stateless convenience wrapper around one FeedbackController step.
ControlOutput control_step(const FeatureVector& s_now, const GoalSpec& goal, const FeedbackDictionary& dict,
                           const SparseSolverConfig& sparse, const ServoConfig& servo);

struct ServoRecord {
  long step = 0;
  Eigen::VectorXd r;
  Eigen::VectorXd v;
  double error = 0.0;
  int target = -1;
  std::size_t remaining = 0;
  Eigen::Index support = 0;
  int iterations = 0;
  double objective = 0.0;
  bool converged = true;
};

enum class StopReason { Converged, TaskComplete, MaxSteps, Diverged };
std::string to_string(StopReason reason);

struct ServoTrace {
  std::vector<ServoRecord> records;
  StopReason reason = StopReason::MaxSteps;
  double initial_error = 0.0;
  double final_error = 0.0;
  double stop_threshold = 0.0;
  std::string message;
  ClothState final_state;

  long steps() const { return records.empty() ? 0 : records.back().step; }
};

struct ServoEnvironment {
  using FrameHook = std::function<void(long step, const Image& frame)>;
  SimParams sim;
  CameraModel camera;
  PerturbationScript perturbation;
  /// Optional per-frame hook (e.g. PNG dump).
  FrameHook on_frame;
};

/// Closed loop per control frame: render, featurize, control_step, integrate
/// r += v / frame_rate, perturb, simulate. Stops at the error threshold, when
/// the goal set is exhausted, after max_steps actions, or on divergence.
ServoTrace run_servo(const ClothState& initial, const ServoEnvironment& env, const GoalSpec& goal,
                     const FeedbackDictionary& dict, const SparseSolverConfig& sparse, const ServoConfig& servo);

/// One JSON object per record; same container format as recordings.
void write_trace(const ServoTrace& trace, const std::filesystem::path& path);
std::string trace_to_jsonl(const ServoTrace& trace);

}  // namespace clothservo
