#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "clothservo/dictionary.hpp"
#include "clothservo/scene.hpp"
#include "clothservo/servo.hpp"
#include "clothservo/sparse.hpp"

namespace clothservo {

inline constexpr std::string_view kVersion = "0.3.0";

enum class Task { Flatten, Fold, Placement, PerturbedHold };
enum class Split { SameSubject, DifferentSubject };

std::string to_string(Task task);
std::string to_string(Split split);
Task parse_task(const std::string& text);
Split parse_split(const std::string& text);

/// Independent RNG stream for one named stage of a seeded pipeline.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stage);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  Task task = Task::Flatten;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};  ///< start-state seeds
  Split split = Split::SameSubject;

  // training
  int record_frames = 300;
  int waypoint_frames = 30;
  int samples_per_word = 20;  ///< n = samples_per_word * n_dic
  int n_dic = 64;

  // evaluation sweeps
  std::vector<int> dict_sizes{8, 16, 32, 64, 128};
  std::vector<double> alphas{0.01, 0.1, 1.0};
  std::vector<FeatureSet> feature_sets{FeatureSet::How, FeatureSet::HowHog, FeatureSet::Color};
  int eval_record_frames = 600;  ///< recording length behind the held-out splits
  bool eval_servo = true;  ///< include the per-feature-set servo suite in eval

  // tasks
  double success_fraction = 0.2;  ///< final / initial feature error counted as success
  int hold_steps = 300;
  double hold_factor = 3.0;
  Vec3 tug_amplitude{0.0, 0.0, 0.02};
  double tug_period = 60.0;

  // different subject
  double variant_stiffness = 0.7;
  Vec3 variant_camera{0.01, -0.01, 0.0};

  Scene scene;
  SparseSolverConfig sparse;
  ServoConfig servo;

  void validate() const;
  /// Complete, resolved INI text; parsing it back yields an identical config.
  std::string to_ini() const;
  static ExperimentConfig from_ini(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string hash() const;
};

/// seed, config hash, and versions, embedded in every report.
nlohmann::json report_header(const ExperimentConfig& cfg);

// ---- training -------------------------------------------------------------

SimulatedRun record_run(const Scene& scene, const ExperimentConfig& cfg, std::uint64_t seed);

/// Words sampled per track (n split evenly), then condensed to `n_dic`.
FeedbackDictionary train_dictionary(const std::vector<FeatureTrack>& tracks, std::size_t n, int n_dic,
                                    std::uint64_t seed, const FeatureSpec& spec,
                                    std::vector<std::string> sources = {});

/// The default pipeline: record, featurize, sample 20 * n_dic pairs, condense.
FeedbackDictionary train_default(const ExperimentConfig& cfg, const FeatureSpec& spec);

// ---- held-out regression ----------------------------------------------------

struct Prediction {
  Eigen::VectorXd actual;
  Eigen::VectorXd predicted;
};

std::vector<Prediction> predict(const FeedbackDictionary& dict, const std::vector<FeedbackWord>& held_out,
                                const SparseSolverConfig& sparse, double* mean_support = nullptr);

/// Mean |v_hat - v*|_2 over the held-out words.
double velocity_error(const std::vector<Prediction>& predictions);

struct SplitWords {
  std::vector<FeedbackWord> train;
  std::vector<FeedbackWord> test;
};

/// Same subject: one recording, pairs split 50/50. Different subject: test
/// pairs come from a second recording of the stiffness/camera variant. Both
/// recordings run cfg.eval_record_frames frames.
SplitWords make_split(const ExperimentConfig& cfg, Split split, std::size_t n_train, std::size_t n_test);

struct SweepRow {
  int n_dic = 0;
  double alpha = 0.0;
  double error = 0.0;
  double support = 0.0;
};

/// Held-out velocity error over every (n_dic, alpha) of the config; all sizes
/// condense the same training pool.
std::vector<SweepRow> velocity_sweep(const ExperimentConfig& cfg, const SplitWords& words);

// ---- tasks ------------------------------------------------------------------

struct TaskSetup {
  ClothState start;
  std::vector<ClothState> goal_states;  ///< one per goal target, for the shape score
  GoalSpec goal;
  PerturbationScript perturbation;
};

TaskSetup make_task(const ExperimentConfig& cfg, Task task, std::uint64_t start_seed, const FeatureSpec& spec);

/// RMS vertex distance.
double shape_error(const ClothState& a, const ClothState& b);

struct TaskOutcome {
  ServoTrace trace;
  double ratio = 1.0;  ///< final / initial feature error
  bool success = false;
  double shape_initial = 0.0;
  double shape_final = 0.0;
  bool shape_success = false;  ///< shape error shrank to success_fraction of its start
  double seconds = 0.0;        ///< wall clock, never written to reports
};

/// One servo run in cfg.scene. Success: sequential goals exhausted, otherwise
/// final / initial feature error <= cfg.success_fraction.
TaskOutcome run_task(const ExperimentConfig& cfg, const FeedbackDictionary& dict, const TaskSetup& setup,
                     const ServoEnvironment::FrameHook& on_frame = {});

struct HoldOutcome {
  ServoTrace calm;
  ServoTrace perturbed;
  double steady = 0.0;  ///< mean feature error of the unperturbed branch
  double peak = 0.0;    ///< max feature error of the perturbed branch
  bool success = false;
};

/// Branches from `settled` (typically the end of a flatten run) into an
/// unperturbed and a perturbed hold of cfg.hold_steps each.
HoldOutcome run_hold(const ExperimentConfig& cfg, const FeedbackDictionary& dict, const ClothState& settled,
                     const GoalSpec& goal);

nlohmann::json task_report(const ExperimentConfig& cfg, std::uint64_t start_seed, const TaskOutcome& out);

}  // namespace clothservo
