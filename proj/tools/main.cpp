// Command-line front end: record, train, servo, eval.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "clothservo/errors.hpp"
#include "clothservo/experiment.hpp"
#include "clothservo/plot.hpp"
#include "clothservo/textio.hpp"

namespace fs = std::filesystem;
using namespace clothservo;

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailed = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const Globals& g, const ExperimentConfig& cfg) {
  const fs::path out(g.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error("cannot create output directory " + out.string());
  write_text(out / "config.ini", cfg.to_ini());
  return out;
}

// ---- record -----------------------------------------------------------------

struct RecordArgs {
  std::optional<int> frames;
  std::string subject = "same";
};

int cmd_record(const Globals& g, const RecordArgs& a) {
  ExperimentConfig cfg = resolve(g);
  if (a.frames) cfg.record_frames = *a.frames;
  if (cfg.record_frames < 2) throw ParameterError("a recording needs at least 2 frames");
  const bool variant = parse_split(a.subject) == Split::DifferentSubject;
  const Scene scene = variant ? cfg.scene.variant(cfg.variant_stiffness, cfg.variant_camera) : cfg.scene;
  const fs::path out = prepare_out(g, cfg);
  const SimulatedRun run = record_run(scene, cfg, derive_seed(cfg.seed, variant ? "record-variant" : "record"));
  Recording rec = write_recording(run, scene.frame_rate(), out);
  std::printf("recorded %zu frames to %s\n", rec.frames.size(), (out / "recording.jsonl").c_str());
  return kOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> recordings;
  std::optional<long> n;
  std::optional<int> n_dic;
  std::string features;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  ExperimentConfig cfg = resolve(g);
  if (a.n_dic) cfg.n_dic = *a.n_dic;
  if (!a.features.empty()) cfg.scene.features.set = parse_feature_set(a.features);
  const long n = a.n ? *a.n : static_cast<long>(cfg.samples_per_word) * cfg.n_dic;
  if (n < 1) throw ParameterError("sample count must be >= 1");

  std::vector<FeatureTrack> tracks;
  std::vector<std::string> sources;
  for (const auto& path : a.recordings) {
    if (!fs::exists(path)) throw LoadError("recording not found: " + path);
    const Recording rec = read_recording_log(path);
    tracks.push_back(extract_track(rec, cfg.scene.features));
    sources.push_back(fs::path(path).lexically_normal().string());
  }
  const fs::path out = prepare_out(g, cfg);
  const FeedbackDictionary dict = train_dictionary(tracks, static_cast<std::size_t>(n), cfg.n_dic,
                                                   derive_seed(cfg.seed, "train"), cfg.scene.features, sources);
  save_dictionary(dict, out / "dictionary.txt");
  std::printf("dictionary: %zu words, layout %s -> %s\n", dict.size(), dict.layout_id().c_str(),
              (out / "dictionary.txt").c_str());
  return kOk;
}

// ---- servo ------------------------------------------------------------------

struct ServoArgs {
  std::string dictionary;
  std::vector<std::string> goals;
  std::string mode;
  std::string task;
  std::optional<std::uint64_t> start_seed;
  std::string features;
  bool dump_frames = false;
};

int cmd_servo(const Globals& g, const ServoArgs& a) {
  ExperimentConfig cfg = resolve(g);
  if (!a.task.empty()) cfg.task = parse_task(a.task);
  if (!a.features.empty()) cfg.scene.features.set = parse_feature_set(a.features);
  const FeedbackDictionary dict = load_dictionary(a.dictionary);
  dict.validate();
  if (dict.layout_id() != cfg.scene.features.layout_id() || !(dict.spec == cfg.scene.features))
    throw LayoutMismatch("dictionary layout " + dict.layout_id() + " does not match the configured features " +
                         cfg.scene.features.layout_id());
  const std::uint64_t start_seed = a.start_seed ? *a.start_seed : cfg.seeds.front();

  TaskSetup setup = make_task(cfg, cfg.task, start_seed, dict.spec);
  if (!a.goals.empty()) {
    setup.goal.targets.clear();
    setup.goal_states.clear();
    for (const auto& path : a.goals) setup.goal.targets.push_back(extract_features(load_png(path), dict.spec));
    setup.goal.costs.clear();
    setup.goal.mode = a.goals.size() == 1 ? GoalMode::Single : GoalMode::Hidden;
  }
  if (!a.mode.empty()) {
    if (a.mode == "single") setup.goal.mode = GoalMode::Single;
    else if (a.mode == "hidden") setup.goal.mode = GoalMode::Hidden;
    else if (a.mode == "sequential") setup.goal.mode = GoalMode::Sequential;
    else throw ParameterError("unknown goal mode '" + a.mode + "'");
  }
  setup.goal.validate();
  if (cfg.task == Task::PerturbedHold) setup.perturbation = {};  // the hold branches carry the tug

  const fs::path out = prepare_out(g, cfg);
  ServoEnvironment::FrameHook hook;
  if (a.dump_frames) {
    fs::create_directories(out / "frames");
    hook = [&out](long t, const Image& frame) {
      char name[32];
      std::snprintf(name, sizeof(name), "frames/%06ld.png", t);
      save_png(frame, out / name);
    };
  }
  const TaskOutcome result = run_task(cfg, dict, setup, hook);
  write_trace(result.trace, out / "trace.jsonl");
  nlohmann::json report = task_report(cfg, start_seed, result);
  bool success = result.success;

  if (cfg.task == Task::PerturbedHold) {
    const HoldOutcome hold = run_hold(cfg, dict, result.trace.final_state, setup.goal);
    write_trace(hold.calm, out / "hold_calm.jsonl");
    write_trace(hold.perturbed, out / "hold_perturbed.jsonl");
    report["hold"] = {{"steady_error", hold.steady}, {"peak_error", hold.peak},
                      {"factor", cfg.hold_factor}, {"success", hold.success}};
    success = hold.success;
    report["success"] = success;
  }
  write_json(out / "report.json", report);
  std::printf("%s: initial %.4f final %.4f (%.3f) after %ld steps, %s -> %s\n", to_string(cfg.task).c_str(),
              result.trace.initial_error, result.trace.final_error, result.ratio, result.trace.steps(),
              to_string(result.trace.reason).c_str(), success ? "success" : "failure");
  return success ? kOk : kTaskFailed;
}

// ---- eval -------------------------------------------------------------------

Rgb palette(std::size_t i) {
  static const Rgb colors[] = {{0.12, 0.35, 0.75}, {0.85, 0.33, 0.10}, {0.20, 0.60, 0.25},
                               {0.55, 0.25, 0.65}, {0.65, 0.55, 0.10}};
  return colors[i % 5];
}

int cmd_eval(const Globals& g) {
  const ExperimentConfig cfg = resolve(g);
  const fs::path out = prepare_out(g, cfg);
  nlohmann::json report = report_header(cfg);
  report["config"] = cfg.to_ini();

  // Velocity error over (N_dic, alpha), same subject.
  const int max_dic = *std::max_element(cfg.dict_sizes.begin(), cfg.dict_sizes.end());
  const std::size_t pool = static_cast<std::size_t>(cfg.samples_per_word) * max_dic;
  const SplitWords same = make_split(cfg, Split::SameSubject, pool, pool);
  const auto rows = velocity_sweep(cfg, same);
  {
    std::ofstream csv(out / "velocity_sweep.csv");
    csv << "n_dic,alpha,velocity_error,mean_support\n";
    for (const auto& r : rows)
      csv << r.n_dic << ',' << format_double(r.alpha) << ',' << format_double(r.error) << ','
          << format_double(r.support) << '\n';
  }
  PlotSpec sweep_plot;
  sweep_plot.log_x = true;
  for (std::size_t k = 0; k < cfg.alphas.size(); ++k) {
    PlotSeries s;
    s.color = palette(k);
    for (const auto& r : rows)
      if (r.alpha == cfg.alphas[k]) {
        s.x.push_back(r.n_dic);
        s.y.push_back(r.error);
      }
    sweep_plot.series.push_back(std::move(s));
  }
  save_png(draw_plot(sweep_plot), out / "velocity_sweep.png");
  report["velocity_sweep"] = nlohmann::json::array();
  for (const auto& r : rows)
    report["velocity_sweep"].push_back({{"n_dic", r.n_dic}, {"alpha", r.alpha}, {"error", r.error}});

  // Same vs. different subject at the default size and alpha, plus a regression table.
  const std::size_t n = static_cast<std::size_t>(cfg.samples_per_word) * cfg.n_dic;
  nlohmann::json subjects;
  std::ofstream reg(out / "regression.csv");
  reg << "split,pair,dof,actual,predicted\n";
  PlotSpec reg_plot;
  reg_plot.identity_line = true;
  for (Split split : {Split::SameSubject, Split::DifferentSubject}) {
    const SplitWords words = make_split(cfg, split, n, n);
    const FeedbackDictionary dict =
        build_dictionary(words.train, cfg.n_dic, derive_seed(cfg.seed, "kmeans"), cfg.scene.features);
    const auto preds = predict(dict, words.test, cfg.sparse);
    const double err = velocity_error(preds);
    subjects[to_string(split)] = err;
    PlotSeries s;
    s.lines = false;
    s.color = palette(split == Split::SameSubject ? 0 : 1);
    for (std::size_t i = 0; i < preds.size(); ++i)
      for (Eigen::Index d = 0; d < preds[i].actual.size(); ++d) {
        reg << to_string(split) << ',' << i << ',' << d << ',' << format_double(preds[i].actual[d]) << ','
            << format_double(preds[i].predicted[d]) << '\n';
        if (preds[i].actual[d] != 0.0 || preds[i].predicted[d] != 0.0) {
          s.x.push_back(preds[i].actual[d]);
          s.y.push_back(preds[i].predicted[d]);
        }
      }
    if (!s.x.empty()) reg_plot.series.push_back(std::move(s));
  }
  if (!reg_plot.series.empty()) save_png(draw_plot(reg_plot), out / "regression.png");
  report["subjects"] = subjects;

  // Servo success per feature set on the configured task.
  if (cfg.eval_servo) {
    std::ofstream suite(out / "feature_suite.csv");
    suite << "feature_set,start_seed,initial_error,final_error,ratio,steps,reason,success,shape_success\n";
    nlohmann::json sets = nlohmann::json::array();
    for (FeatureSet set : cfg.feature_sets) {
      ExperimentConfig c = cfg;
      c.scene.features.set = set;
      const FeedbackDictionary dict = train_default(c, c.scene.features);
      int ok = 0, shape_ok = 0;
      for (std::uint64_t s : c.seeds) {
        const TaskOutcome r = run_task(c, dict, make_task(c, c.task, s, c.scene.features));
        ok += r.success;
        shape_ok += r.shape_success;
        suite << to_string(set) << ',' << s << ',' << format_double(r.trace.initial_error) << ','
              << format_double(r.trace.final_error) << ',' << format_double(r.ratio) << ',' << r.trace.steps() << ','
              << to_string(r.trace.reason) << ',' << r.success << ',' << r.shape_success << '\n';
        std::fprintf(stderr, "  %s seed %llu: ratio %.3f %s\n", to_string(set).c_str(),
                     static_cast<unsigned long long>(s), r.ratio, r.success ? "ok" : "fail");
      }
      const double runs = static_cast<double>(c.seeds.size());
      sets.push_back({{"feature_set", to_string(set)},
                      {"success_rate", ok / runs},
                      {"shape_success_rate", shape_ok / runs}});
    }
    report["feature_sets"] = sets;
  }
  write_json(out / "report.json", report);
  std::printf("eval written to %s\n", out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual servoing of simulated cloth with a learned feedback dictionary"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory");

  RecordArgs ra;
  auto* rec = app.add_subcommand("record", "simulate a random gripper trajectory and save frames + log");
  rec->add_option("--frames", ra.frames, "number of frames");
  rec->add_option("--subject", ra.subject, "same | different (stiffness/camera variant)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "build a feedback dictionary from recordings");
  train->add_option("--recording", ta.recordings, "recording log(s)")->required();
  train->add_option("--n", ta.n, "number of sampled pairs (default 20 x n_dic)");
  train->add_option("--n-dic", ta.n_dic, "dictionary size");
  train->add_option("--features", ta.features, "how | hog | color | how+hog");

  ServoArgs sa;
  auto* servo = app.add_subcommand("servo", "run the closed loop on a simulated task");
  servo->add_option("--dictionary", sa.dictionary, "dictionary file")->required();
  servo->add_option("--goal", sa.goals, "goal image(s); default: the task's own goal");
  servo->add_option("--mode", sa.mode, "single | hidden | sequential");
  servo->add_option("--task", sa.task, "flatten | fold | placement | perturbed-hold");
  servo->add_option("--start-seed", sa.start_seed, "start-state seed (default: first configured seed)");
  servo->add_option("--features", sa.features, "feature set; must match the dictionary");
  servo->add_flag("--dump-frames", sa.dump_frames, "write every rendered frame");

  app.add_subcommand("eval", "velocity-error sweeps, subject split, feature-set suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (rec->parsed()) return cmd_record(g, ra);
    if (train->parsed()) return cmd_train(g, ta);
    if (servo->parsed()) return cmd_servo(g, sa);
    return cmd_eval(g);
  } catch (const std::exception& e) {
    // Bad flags, unreadable inputs, layout mismatches, unwritable outputs.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
