#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "clothservo/errors.hpp"
#include "clothservo/experiment.hpp"
#include "clothservo/plot.hpp"

using namespace clothservo;

TEST_SUITE("experiment") {
  TEST_CASE("config round trips through its ini text") {
    ExperimentConfig cfg;
    cfg.seed = 987654321987ull;
    cfg.task = Task::Fold;
    cfg.seeds = {4, 2, 9};
    cfg.alphas = {0.003, 0.1};
    cfg.scene.sim.damping = 1.0 / 3.0;
    cfg.scene.features.set = FeatureSet::HowHog;
    cfg.scene.camera.eye.x() = 0.0125;
    cfg.sparse.alpha = 0.07;
    cfg.servo.gain = 0.35;
    const std::string text = cfg.to_ini();
    const ExperimentConfig back = ExperimentConfig::from_ini(text);
    CHECK(back.to_ini() == text);
    CHECK(back.hash() == cfg.hash());
    CHECK(back.seed == cfg.seed);
    CHECK(back.scene.sim.damping == cfg.scene.sim.damping);
    CHECK(back.scene.features == cfg.scene.features);

    ExperimentConfig other = cfg;
    other.servo.gain = 0.36;
    CHECK(other.hash() != cfg.hash());
  }

  TEST_CASE("partial configs keep defaults and bad ones are rejected") {
    const auto cfg = ExperimentConfig::from_ini("[servo]\ngain = 0.25\n");
    CHECK(cfg.servo.gain == 0.25);
    CHECK(cfg.n_dic == ExperimentConfig{}.n_dic);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[servo]\ngian = 0.25\n"), ParameterError);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[nonsense]\na = 1\n"), ParameterError);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[servo]\ngain = fast\n"), Error);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[experiment]\nseeds = 1, 1\n"), ParameterError);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[eval]\nalphas =\n"), ParameterError);
    CHECK_THROWS_AS(ExperimentConfig::from_ini("[eval]\ndict_sizes = 8, 0\n"), ParameterError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.ini"), Error);
  }

  TEST_CASE("reports embed seed, config hash and version") {
    ExperimentConfig cfg;
    const auto j = report_header(cfg);
    CHECK(j.at("seed") == cfg.seed);
    CHECK(j.at("config_hash") == cfg.hash());
    CHECK(j.at("version") == std::string(kVersion));
    CHECK(j.contains("eigen"));
  }

  TEST_CASE("derived seeds separate stages") {
    std::set<std::uint64_t> seen;
    for (const char* stage : {"record", "train", "kmeans", "start/0", "start/1"}) seen.insert(derive_seed(1, stage));
    seen.insert(derive_seed(2, "record"));
    CHECK(seen.size() == 6);
    CHECK(derive_seed(1, "record") == derive_seed(1, "record"));
  }

  TEST_CASE("task and split names") {
    for (Task t : {Task::Flatten, Task::Fold, Task::Placement, Task::PerturbedHold}) CHECK(parse_task(to_string(t)) == t);
    for (Split s : {Split::SameSubject, Split::DifferentSubject}) CHECK(parse_split(to_string(s)) == s);
    CHECK_THROWS_AS(parse_task("juggle"), ParameterError);
  }

  TEST_CASE("a single-point sweep yields one row") {
    ExperimentConfig cfg;
    cfg.eval_record_frames = 60;
    cfg.dict_sizes = {8};
    cfg.alphas = {0.1};
    const SplitWords words = make_split(cfg, Split::SameSubject, 160, 40);
    CHECK(words.train.size() == 160);
    CHECK(words.test.size() == 40);
    const auto rows = velocity_sweep(cfg, words);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_dic == 8);
    CHECK(rows[0].alpha == 0.1);
    CHECK(std::isfinite(rows[0].error));
    CHECK(rows[0].error > 0.0);
  }

  TEST_CASE("in-sample regression interpolates") {
    ExperimentConfig cfg;
    cfg.eval_record_frames = 40;
    const SplitWords split = make_split(cfg, Split::SameSubject, 30, 1);
    // (a, b) and (b, a) give the same word; keep one copy of each.
    SplitWords same;
    for (const auto& w : split.train)
      if (std::find(same.train.begin(), same.train.end(), w) == same.train.end()) same.train.push_back(w);
    same.test = same.train;
    cfg.dict_sizes = {static_cast<int>(same.train.size())};
    cfg.alphas = {1e-12};
    cfg.sparse.tol = 1e-13;
    cfg.sparse.max_iters = 1000000;
    const auto rows = velocity_sweep(cfg, same);
    REQUIRE(rows.size() == 1);
    MESSAGE("in-sample velocity error " << rows[0].error);
    CHECK(rows[0].error < 1e-6);
  }

  TEST_CASE("different subject draws its test words from another recording") {
    ExperimentConfig cfg;
    cfg.eval_record_frames = 40;
    const auto same = make_split(cfg, Split::SameSubject, 50, 20);
    const auto diff = make_split(cfg, Split::DifferentSubject, 50, 20);
    CHECK(diff.train == same.train);
    CHECK(!(diff.test == same.test));
  }

  TEST_CASE("task setups") {
    ExperimentConfig cfg;
    const auto spec = cfg.scene.features;
    const auto flat = make_task(cfg, Task::Flatten, 0, spec);
    CHECK(flat.goal.mode == GoalMode::Single);
    CHECK(flat.goal_states.size() == 1);
    CHECK(flat.perturbation.empty());
    CHECK(shape_error(flat.start, flat.goal_states[0]) > 0.01);
    CHECK(shape_error(flat.start, flat.start) == 0.0);

    const auto fold = make_task(cfg, Task::Fold, 0, spec);
    CHECK(fold.goal.mode == GoalMode::Sequential);
    CHECK(fold.goal.targets.size() == 2);
    CHECK(fold.goal.satisfaction_radius > 0.0);

    const auto place = make_task(cfg, Task::Placement, 0, spec);
    CHECK(place.goal.mode == GoalMode::Hidden);
    CHECK(place.goal.targets.size() == 3);

    const auto hold = make_task(cfg, Task::PerturbedHold, 0, spec);
    CHECK(!hold.perturbation.empty());

    const auto again = make_task(cfg, Task::Flatten, 0, spec);
    CHECK(again.start.positions == flat.start.positions);
    CHECK(make_task(cfg, Task::Flatten, 1, spec).start.positions != flat.start.positions);
  }

  TEST_CASE("plots draw on a white canvas") {
    PlotSpec spec;
    spec.log_x = true;
    spec.series.push_back({{8, 16, 32}, {0.3, 0.2, 0.1}, {0.0, 0.0, 1.0}, true});
    const Image img = draw_plot(spec);
    CHECK(img.width() == spec.width);
    CHECK(img.channels() == 3);
    CHECK(img.at(spec.width - 1, 0, 0) == 1.0);
    bool blue = false;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) blue |= img.at(x, y, 2) == 1.0 && img.at(x, y, 0) == 0.0;
    CHECK(blue);

    PlotSpec empty;
    CHECK_THROWS_AS(draw_plot(empty), ParameterError);
    spec.series[0].x[0] = -1.0;
    CHECK_THROWS_AS(draw_plot(spec), ParameterError);
  }
}
