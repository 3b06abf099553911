#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clothservo/errors.hpp"
#include "clothservo/experiment.hpp"
#include "clothservo/scene.hpp"
#include "clothservo/servo.hpp"

using namespace clothservo;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return g(rng); });
}

/// Dictionary over a color spec with 3 * bins feature entries.
FeedbackDictionary synthetic(const Eigen::MatrixXd& ds, const Eigen::MatrixXd& dr) {
  FeedbackDictionary d;
  d.spec.set = FeatureSet::Color;
  d.spec.color_bins = static_cast<int>(ds.rows() / 3);
  d.n_dof = static_cast<int>(dr.rows());
  for (Eigen::Index j = 0; j < ds.cols(); ++j) d.words.push_back({ds.col(j), dr.col(j)});
  return d;
}

FeatureVector fv(const FeedbackDictionary& d, Eigen::VectorXd v) { return {std::move(v), d.layout_id()}; }

ServoConfig loose() {
  ServoConfig s;
  s.velocity_clamp = 1e6;
  return s;
}

SparseSolverConfig precise(double alpha) {
  SparseSolverConfig c;
  c.alpha = alpha;
  c.tol = 1e-10;
  c.max_iters = 100000;
  return c;
}

/// Feedback dictionary of a small real recording.
const FeedbackDictionary& small_dictionary() {
  static const FeedbackDictionary dict = [] {
    ExperimentConfig cfg;
    cfg.record_frames = 60;
    cfg.n_dic = 12;
    return train_default(cfg, cfg.scene.features);
  }();
  return dict;
}

}  // namespace

TEST_SUITE("servo") {
  TEST_CASE("no feedback, no motion, in every mode") {
    std::mt19937_64 rng(1);
    const auto dict = synthetic(gaussian(6, 10, rng), gaussian(6, 10, rng));
    const FeatureVector s = fv(dict, gaussian(6, 1, rng).col(0));
    for (GoalMode mode : {GoalMode::Single, GoalMode::Hidden, GoalMode::Sequential}) {
      GoalSpec goal;
      goal.mode = mode;
      goal.targets = {s};
      const auto out = control_step(s, goal, dict, SparseSolverConfig{}, ServoConfig{});
      if (mode == GoalMode::Sequential) {
        CHECK(out.complete);
      } else {
        CHECK(out.target == 0);
        CHECK(out.error == 0.0);
      }
      CHECK(out.v.isZero(0.0));
    }
  }

  TEST_CASE("hidden mode with duplicate targets equals single mode") {
    std::mt19937_64 rng(2);
    const auto dict = synthetic(gaussian(9, 20, rng), gaussian(6, 20, rng));
    const FeatureVector target = fv(dict, gaussian(9, 1, rng).col(0));
    const FeatureVector now = fv(dict, gaussian(9, 1, rng).col(0));
    GoalSpec hidden;
    hidden.mode = GoalMode::Hidden;
    hidden.targets = {target, target, target};
    const auto a = control_step(now, GoalSpec::single(target), dict, SparseSolverConfig{}, ServoConfig{});
    const auto b = control_step(now, hidden, dict, SparseSolverConfig{}, ServoConfig{});
    CHECK(a.v == b.v);
    CHECK(a.error == b.error);
  }

  TEST_CASE("exact linear ground truth is recovered") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd W = gaussian(6, 9, rng);
    const Eigen::MatrixXd ds = gaussian(9, 40, rng);
    const auto dict = synthetic(ds, W * ds);
    const Eigen::VectorXd delta = 0.3 * gaussian(9, 1, rng).col(0);
    const FeatureVector target = fv(dict, gaussian(9, 1, rng).col(0));
    const FeatureVector now = fv(dict, target.values + delta);
    ServoConfig servo = loose();
    const auto out = control_step(now, GoalSpec::single(target), dict, precise(1e-6), servo);
    const Eigen::VectorXd expected = -servo.gain * W * delta;
    CHECK((out.v - expected).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("doubling the gain doubles the unclamped command") {
    std::mt19937_64 rng(4);
    const auto dict = synthetic(gaussian(9, 15, rng), gaussian(6, 15, rng));
    const auto goal = GoalSpec::single(fv(dict, gaussian(9, 1, rng).col(0)));
    const FeatureVector now = fv(dict, gaussian(9, 1, rng).col(0));
    ServoConfig s1, s2;
    s2.gain = 2.0 * s1.gain;
    const auto a = control_step(now, goal, dict, SparseSolverConfig{}, s1);
    const auto b = control_step(now, goal, dict, SparseSolverConfig{}, s2);
    CHECK(b.v_unclamped == 2.0 * a.v_unclamped);
  }

  TEST_CASE("velocity clamp keeps direction") {
    Eigen::VectorXd v(3);
    v << 0.3, -0.1, 0.05;
    const Eigen::VectorXd c = clamp_velocity(v, 0.1);
    CHECK(c.cwiseAbs().maxCoeff() == doctest::Approx(0.1));
    CHECK((c / c.norm() - v / v.norm()).norm() < 1e-15);
    CHECK(clamp_velocity(0.5 * c, 0.1) == 0.5 * c);
  }

  TEST_CASE("hidden selection ignores a common velocity scale") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd ds = gaussian(9, 25, rng);
    const Eigen::MatrixXd dr = gaussian(6, 25, rng);
    GoalSpec goal;
    goal.mode = GoalMode::Hidden;
    for (int k = 0; k < 4; ++k) goal.targets.push_back({gaussian(9, 1, rng).col(0), ""});
    for (int trial = 0; trial < 10; ++trial) {
      const auto d1 = synthetic(ds, dr);
      const auto d2 = synthetic(ds, 3.7 * dr);
      for (auto& t : goal.targets) t.layout_id = d1.layout_id();
      const FeatureVector now = fv(d1, gaussian(9, 1, rng).col(0));
      const auto a = control_step(now, goal, d1, SparseSolverConfig{}, ServoConfig{});
      const auto b = control_step(now, goal, d2, SparseSolverConfig{}, ServoConfig{});
      CHECK(a.target == b.target);
    }
  }

  TEST_CASE("sequential goals are dropped only once reached") {
    // Identity dictionary: the command moves the features straight back.
    Eigen::MatrixXd ds(6, 12);
    ds << Eigen::MatrixXd::Identity(6, 6), -Eigen::MatrixXd::Identity(6, 6);
    const auto dict = synthetic(ds, ds);
    std::mt19937_64 rng(6);
    GoalSpec goal;
    goal.mode = GoalMode::Sequential;
    for (int k = 0; k < 3; ++k) goal.targets.push_back(fv(dict, gaussian(6, 1, rng).col(0)));
    goal.satisfaction_radius = 0.05;

    for (double spacing : {1.0, 100.0}) {
      CAPTURE(spacing);
      goal.costs = {0.0, spacing, 2.0 * spacing};
      FeedbackController ctl(dict, goal, precise(1e-6), loose());
      Eigen::VectorXd s = Eigen::VectorXd::Zero(6);
      std::size_t prev = ctl.remaining().size();
      std::vector<int> removed;
      bool complete = false;
      for (int t = 0; t < 200 && !complete; ++t) {
        const auto before = ctl.remaining();
        const auto out = ctl.control_step(fv(dict, s));
        const auto& after = ctl.remaining();
        CHECK(after.size() <= prev);
        prev = after.size();
        for (int i : before)
          if (std::find(after.begin(), after.end(), i) == after.end()) {
            CHECK((s - goal.targets[static_cast<std::size_t>(i)].values).norm() <= goal.satisfaction_radius);
            removed.push_back(i);
          }
        complete = out.complete;
        s += out.v;
      }
      if (spacing > 10.0) {
        // Costs dominate the progress term: targets are visited in cost order.
        CHECK(complete);
        CHECK(ctl.remaining().empty());
        CHECK(removed == std::vector<int>{0, 1, 2});
      }
    }
  }

  TEST_CASE("goal and config validation") {
    GoalSpec g;
    CHECK_THROWS_AS(g.validate(), ParameterError);
    g.targets = {{Eigen::VectorXd::Zero(3), "x"}, {Eigen::VectorXd::Zero(3), "x"}};
    CHECK_THROWS_AS(g.validate(), ParameterError);  // single mode with two targets
    g.mode = GoalMode::Sequential;
    g.costs = {1.0};
    CHECK_THROWS_AS(g.validate(), ParameterError);
    g.costs = {1.0, 2.0};
    CHECK_NOTHROW(g.validate());

    ServoConfig s;
    s.gain = 0.0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = ServoConfig{};
    s.stop_epsilon = -1.0;
    CHECK_THROWS_AS(s.validate(), ParameterError);

    std::mt19937_64 rng(7);
    const auto dict = synthetic(gaussian(6, 4, rng), gaussian(6, 4, rng));
    const auto goal = GoalSpec::single(fv(dict, Eigen::VectorXd::Zero(6)));
    CHECK_THROWS_AS(control_step({Eigen::VectorXd::Zero(6), "elsewhere"}, goal, dict, SparseSolverConfig{}, ServoConfig{}),
                    LayoutMismatch);
    CHECK_THROWS_AS(control_step(fv(dict, Eigen::VectorXd::Zero(6)), GoalSpec::single({Eigen::VectorXd::Zero(6), "elsewhere"}),
                                 dict, SparseSolverConfig{}, ServoConfig{}),
                    LayoutMismatch);
  }

  TEST_CASE("starting at the goal stops immediately") {
    const Scene scene;
    const ClothState start = crumpled_state(scene, 3, 30);
    const auto& dict = small_dictionary();
    const auto goal = GoalSpec::single(extract_features(render(start, scene.camera), dict.spec));
    ServoEnvironment env{scene.sim, scene.camera, {}, {}};
    ServoConfig servo;
    servo.stop_epsilon = 1e-9;
    const ServoTrace tr = run_servo(start, env, goal, dict, SparseSolverConfig{}, servo);
    CHECK(tr.reason == StopReason::Converged);
    CHECK(tr.steps() == 0);
    CHECK(tr.final_error <= servo.stop_epsilon);
  }

  TEST_CASE("an all-zero dictionary never moves") {
    const Scene scene;
    FeedbackDictionary zero;
    zero.spec = scene.features;
    zero.n_dof = 6;
    zero.frame_rate = scene.frame_rate();
    for (int i = 0; i < 3; ++i)
      zero.words.push_back({Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scene.features.feature_length())),
                            Eigen::VectorXd::Zero(6)});
    const ClothState start = crumpled_state(scene, 4, 30);
    const auto goal = GoalSpec::single(extract_features(render(flat_state(scene, 30), scene.camera), zero.spec));
    ServoConfig servo;
    servo.max_steps = 5;
    const ServoTrace tr = run_servo(start, {scene.sim, scene.camera, {}, {}}, goal, zero, SparseSolverConfig{}, servo);
    CHECK(tr.reason == StopReason::MaxSteps);
    CHECK(tr.steps() == 5);
    for (const auto& r : tr.records) {
      CHECK(r.v.isZero(0.0));
      CHECK(r.r == start.grippers.r);
    }
  }

  TEST_CASE("trace integrity on a real closed loop") {
    const Scene scene;
    const auto& dict = small_dictionary();
    const ClothState start = crumpled_state(scene, 5);
    const auto goal = GoalSpec::single(extract_features(render(flat_state(scene), scene.camera), dict.spec));
    ServoConfig servo;
    servo.max_steps = 25;
    long frames = 0;
    ServoEnvironment env{scene.sim, scene.camera, {}, [&](long, const Image&) { ++frames; }};
    const ServoTrace tr = run_servo(start, env, goal, dict, SparseSolverConfig{}, servo);
    REQUIRE(tr.records.size() >= 2);
    CHECK(frames == static_cast<long>(tr.records.size()));
    for (std::size_t t = 0; t + 1 < tr.records.size(); ++t) {
      const auto& a = tr.records[t];
      const auto& b = tr.records[t + 1];
      CHECK(b.step == a.step + 1);
      CHECK((b.r - a.r - a.v / dict.frame_rate).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(a.v.cwiseAbs().maxCoeff() <= servo.velocity_clamp + 1e-15);
    }
    const std::string jsonl = trace_to_jsonl(tr);
    CHECK(static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')) == tr.records.size());

    FeedbackDictionary wrong_dof = dict;
    for (auto& w : wrong_dof.words) w.dr = Eigen::VectorXd::Zero(3);
    wrong_dof.n_dof = 3;
    CHECK_THROWS_AS(run_servo(start, env, goal, wrong_dof, SparseSolverConfig{}, servo), ContractError);
  }
}
