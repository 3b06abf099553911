#include "clothservo/experiment.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <cmath>
#include <set>
#include <sstream>

#include "clothservo/errors.hpp"
#include "clothservo/textio.hpp"

namespace clothservo {

std::string to_string(Task task) {
  switch (task) {
    case Task::Flatten: return "flatten";
    case Task::Fold: return "fold";
    case Task::Placement: return "placement";
    case Task::PerturbedHold: return "perturbed-hold";
  }
  return "flatten";
}

std::string to_string(Split split) {
  return split == Split::SameSubject ? "same-subject" : "different-subject";
}

Task parse_task(const std::string& text) {
  const std::string t(trim(text));
  if (t == "flatten") return Task::Flatten;
  if (t == "fold") return Task::Fold;
  if (t == "placement") return Task::Placement;
  if (t == "perturbed-hold") return Task::PerturbedHold;
  throw ParameterError("unknown task '" + t + "'");
}

Split parse_split(const std::string& text) {
  const std::string t(trim(text));
  if (t == "same-subject" || t == "same") return Split::SameSubject;
  if (t == "different-subject" || t == "different") return Split::DifferentSubject;
  throw ParameterError("unknown split '" + t + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
  // splitmix64 finalizer over the base seed mixed with the stage name
  std::uint64_t z = base ^ fnv1a64(stage);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// ---- config -----------------------------------------------------------------

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += fmt(xs[i]);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      const auto t = trim(cur);
      if (!t.empty()) out.emplace_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::string vec3_text(const Vec3& v) {
  return format_double(v.x()) + ", " + format_double(v.y()) + ", " + format_double(v.z());
}

Vec3 parse_vec3(const std::string& text, const std::string& field) {
  const auto parts = split_list(text);
  if (parts.size() != 3) throw ParameterError("'" + field + "' needs three comma-separated values");
  return {parse_double(parts[0], field), parse_double(parts[1], field), parse_double(parts[2], field)};
}

Rgb parse_rgb(const std::string& text, const std::string& field) {
  const Vec3 v = parse_vec3(text, field);
  return {v.x(), v.y(), v.z()};
}

std::string rgb_text(const Rgb& c) { return vec3_text(Vec3(c[0], c[1], c[2])); }

using Section = std::vector<std::pair<std::string, std::string>>;
using Document = std::vector<std::pair<std::string, Section>>;

Document to_document(const ExperimentConfig& c) {
  const auto d = [](double x) { return format_double(x); };
  const auto i = [](long long x) { return std::to_string(x); };
  Document doc;
  doc.push_back({"experiment",
                 {{"seed", std::to_string(c.seed)},
                  {"task", to_string(c.task)},
                  {"seeds", join(c.seeds, [](std::uint64_t s) { return std::to_string(s); })},
                  {"split", to_string(c.split)},
                  {"success_fraction", d(c.success_fraction)}}});
  doc.push_back({"training",
                 {{"record_frames", i(c.record_frames)},
                  {"waypoint_frames", i(c.waypoint_frames)},
                  {"samples_per_word", i(c.samples_per_word)},
                  {"n_dic", i(c.n_dic)}}});
  doc.push_back({"eval",
                 {{"dict_sizes", join(c.dict_sizes, [](int n) { return std::to_string(n); })},
                  {"alphas", join(c.alphas, [](double a) { return format_double(a); })},
                  {"feature_sets", join(c.feature_sets, [](FeatureSet f) { return to_string(f); })},
                  {"record_frames", i(c.eval_record_frames)},
                  {"servo_suite", c.eval_servo ? "1" : "0"}}});
  doc.push_back({"hold",
                 {{"steps", i(c.hold_steps)},
                  {"factor", d(c.hold_factor)},
                  {"tug_amplitude", vec3_text(c.tug_amplitude)},
                  {"tug_period", d(c.tug_period)}}});
  doc.push_back({"variant", {{"stiffness", d(c.variant_stiffness)}, {"camera_offset", vec3_text(c.variant_camera)}}});
  const Scene& s = c.scene;
  doc.push_back({"scene",
                 {{"rows", i(s.rows)},
                  {"cols", i(s.cols)},
                  {"cloth_size", d(s.cloth_size)},
                  {"spread", d(s.spread)},
                  {"reach_out", d(s.reach_out)},
                  {"reach_in", d(s.reach_in)},
                  {"reach_offset", d(s.reach_offset)}}});
  const SimParams& p = s.sim;
  doc.push_back({"sim",
                 {{"structural_stiffness", d(p.structural_stiffness)},
                  {"shear_stiffness", d(p.shear_stiffness)},
                  {"bend_stiffness", d(p.bend_stiffness)},
                  {"damping", d(p.damping)},
                  {"gravity", d(p.gravity)},
                  {"timestep", d(p.timestep)},
                  {"substeps", i(p.substeps)},
                  {"max_gripper_speed", d(p.max_gripper_speed)},
                  {"vertex_mass", d(p.vertex_mass)},
                  {"ground_height", p.ground_height ? d(*p.ground_height) : "none"}}});
  const CameraModel& cam = s.camera;
  doc.push_back({"camera",
                 {{"eye", vec3_text(cam.eye)},
                  {"look_at", vec3_text(cam.look_at)},
                  {"up", vec3_text(cam.up)},
                  {"fov", d(cam.fov)},
                  {"width", i(cam.width)},
                  {"height", i(cam.height)},
                  {"light_dir", vec3_text(cam.light_dir)},
                  {"background", rgb_text(cam.background)},
                  {"cloth", rgb_text(cam.cloth)},
                  {"ambient", d(cam.ambient)}}});
  Section features;
  for (auto& kv : s.features.to_entries()) features.push_back(kv);
  doc.push_back({"features", features});
  doc.push_back({"sparse", {{"alpha", d(c.sparse.alpha)}, {"max_iters", i(c.sparse.max_iters)}, {"tol", d(c.sparse.tol)}}});
  doc.push_back({"servo",
                 {{"gain", d(c.servo.gain)},
                  {"max_steps", i(c.servo.max_steps)},
                  {"stop_epsilon", d(c.servo.stop_epsilon)},
                  {"stop_fraction", d(c.servo.stop_fraction)},
                  {"velocity_clamp", d(c.servo.velocity_clamp)}}});
  return doc;
}

class Reader {
 public:
  Reader(std::string section, std::map<std::string, std::string> values)
      : section_(std::move(section)), values_(std::move(values)) {}

  template <typename F>
  void get(const std::string& key, F assign) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    assign(it->second, section_ + "." + key);
    values_.erase(it);
  }
  void finish() const {
    if (!values_.empty())
      throw ParameterError("unknown config key '" + section_ + "." + values_.begin()->first + "'");
  }

 private:
  std::string section_;
  std::map<std::string, std::string> values_;
};

auto as_double(double& out) {
  return [&out](const std::string& v, const std::string& f) { out = parse_double(v, f); };
}
auto as_int(int& out) {
  return [&out](const std::string& v, const std::string& f) { out = static_cast<int>(parse_int(v, f)); };
}
auto as_vec3(Vec3& out) {
  return [&out](const std::string& v, const std::string& f) { out = parse_vec3(v, f); };
}
auto as_rgb(Rgb& out) {
  return [&out](const std::string& v, const std::string& f) { out = parse_rgb(v, f); };
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ParameterError("seed list must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ParameterError("seeds must be distinct");
  if (dict_sizes.empty() || alphas.empty() || feature_sets.empty())
    throw ParameterError("sweeps must not be empty");
  for (int n : dict_sizes)
    if (n < 1) throw ParameterError("dictionary sizes must be >= 1");
  for (double a : alphas)
    if (!(a >= 0.0)) throw ParameterError("alpha values must be >= 0");
  if (eval_record_frames < 2) throw ParameterError("eval record_frames must be >= 2");
  if (record_frames < 2) throw ParameterError("a recording needs at least 2 frames");
  if (waypoint_frames < 1) throw ParameterError("waypoint_frames must be >= 1");
  if (samples_per_word < 1) throw ParameterError("samples_per_word must be >= 1");
  if (n_dic < 1) throw ParameterError("n_dic must be >= 1");
  if (!(success_fraction > 0.0)) throw ParameterError("success_fraction must be > 0");
  if (hold_steps < 1 || !(hold_factor > 0.0)) throw ParameterError("hold settings must be positive");
  if (!(tug_period > 0.0)) throw ParameterError("tug period must be > 0");
  if (!(variant_stiffness > 0.0)) throw ParameterError("variant stiffness scale must be > 0");
  if (scene.rows < 2 || scene.cols < 2 || !(scene.cloth_size > 0.0)) throw ParameterError("bad cloth grid");
  if (scene.camera.width != scene.features.source_width() || scene.camera.height != scene.features.source_height())
    throw ParameterError("camera image size must equal the feature pipeline's source size");
  scene.sim.validate();
  scene.camera.validate();
  scene.features.how.validate();
  sparse.validate();
  servo.validate();
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, section] : to_document(*this)) {
    if (!first) os << '\n';
    first = false;
    os << '[' << name << "]\n";
    for (const auto& [k, v] : section) os << k << " = " << v << '\n';
  }
  return os.str();
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config syntax: ") + e.what());
  }

  ExperimentConfig c;
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [name, node] : tree) {
    if (node.empty() && !node.data().empty()) throw ParameterError("config key '" + name + "' outside a section");
    for (const auto& [k, v] : node) sections[name][k] = v.data();
  }
  auto take = [&](const std::string& name) {
    auto it = sections.find(name);
    Reader r(name, it == sections.end() ? std::map<std::string, std::string>{} : it->second);
    if (it != sections.end()) sections.erase(it);
    return r;
  };

  {
    Reader r = take("experiment");
    r.get("seed", [&](const auto& v, const auto& f) { c.seed = parse_uint64(v, f); });
    r.get("task", [&](const auto& v, const auto&) { c.task = parse_task(v); });
    r.get("seeds", [&](const auto& v, const auto& f) {
      c.seeds.clear();
      for (auto& s : split_list(v)) c.seeds.push_back(parse_uint64(s, f));
    });
    r.get("split", [&](const auto& v, const auto&) { c.split = parse_split(v); });
    r.get("success_fraction", as_double(c.success_fraction));
    r.finish();
  }
  {
    Reader r = take("training");
    r.get("record_frames", as_int(c.record_frames));
    r.get("waypoint_frames", as_int(c.waypoint_frames));
    r.get("samples_per_word", as_int(c.samples_per_word));
    r.get("n_dic", as_int(c.n_dic));
    r.finish();
  }
  {
    Reader r = take("eval");
    r.get("dict_sizes", [&](const auto& v, const auto& f) {
      c.dict_sizes.clear();
      for (auto& s : split_list(v)) c.dict_sizes.push_back(static_cast<int>(parse_int(s, f)));
    });
    r.get("alphas", [&](const auto& v, const auto& f) {
      c.alphas.clear();
      for (auto& s : split_list(v)) c.alphas.push_back(parse_double(s, f));
    });
    r.get("feature_sets", [&](const auto& v, const auto&) {
      c.feature_sets.clear();
      for (auto& s : split_list(v)) c.feature_sets.push_back(parse_feature_set(s));
    });
    r.get("record_frames", as_int(c.eval_record_frames));
    r.get("servo_suite", [&](const auto& v, const auto& f) { c.eval_servo = parse_int(v, f) != 0; });
    r.finish();
  }
  {
    Reader r = take("hold");
    r.get("steps", as_int(c.hold_steps));
    r.get("factor", as_double(c.hold_factor));
    r.get("tug_amplitude", as_vec3(c.tug_amplitude));
    r.get("tug_period", as_double(c.tug_period));
    r.finish();
  }
  {
    Reader r = take("variant");
    r.get("stiffness", as_double(c.variant_stiffness));
    r.get("camera_offset", as_vec3(c.variant_camera));
    r.finish();
  }
  {
    Reader r = take("scene");
    Scene& s = c.scene;
    r.get("rows", as_int(s.rows));
    r.get("cols", as_int(s.cols));
    r.get("cloth_size", as_double(s.cloth_size));
    r.get("spread", as_double(s.spread));
    r.get("reach_out", as_double(s.reach_out));
    r.get("reach_in", as_double(s.reach_in));
    r.get("reach_offset", as_double(s.reach_offset));
    r.finish();
  }
  {
    Reader r = take("sim");
    SimParams& p = c.scene.sim;
    r.get("structural_stiffness", as_double(p.structural_stiffness));
    r.get("shear_stiffness", as_double(p.shear_stiffness));
    r.get("bend_stiffness", as_double(p.bend_stiffness));
    r.get("damping", as_double(p.damping));
    r.get("gravity", as_double(p.gravity));
    r.get("timestep", as_double(p.timestep));
    r.get("substeps", as_int(p.substeps));
    r.get("max_gripper_speed", as_double(p.max_gripper_speed));
    r.get("vertex_mass", as_double(p.vertex_mass));
    r.get("ground_height", [&](const auto& v, const auto& f) {
      if (trim(v) == "none")
        p.ground_height.reset();
      else
        p.ground_height = parse_double(v, f);
    });
    r.finish();
  }
  {
    Reader r = take("camera");
    CameraModel& cam = c.scene.camera;
    r.get("eye", as_vec3(cam.eye));
    r.get("look_at", as_vec3(cam.look_at));
    r.get("up", as_vec3(cam.up));
    r.get("fov", as_double(cam.fov));
    r.get("width", as_int(cam.width));
    r.get("height", as_int(cam.height));
    r.get("light_dir", [&](const auto& v, const auto& f) { cam.light_dir = parse_vec3(v, f).normalized(); });
    r.get("background", as_rgb(cam.background));
    r.get("cloth", as_rgb(cam.cloth));
    r.get("ambient", as_double(cam.ambient));
    r.finish();
  }
  {
    auto it = sections.find("features");
    if (it != sections.end()) {
      std::map<std::string, std::string> merged;
      for (auto& [k, v] : c.scene.features.to_entries()) merged[k] = v;
      for (auto& [k, v] : it->second) {
        if (!merged.count(k) && k.rfind("filter.", 0) != 0)
          throw ParameterError("unknown config key 'features." + k + "'");
        merged[k] = v;
      }
      try {
        c.scene.features = FeatureSpec::from_entries(merged);
      } catch (const LoadError& e) {
        throw ParameterError(std::string("features: ") + e.what());
      }
      sections.erase(it);
    }
  }
  {
    Reader r = take("sparse");
    r.get("alpha", as_double(c.sparse.alpha));
    r.get("max_iters", as_int(c.sparse.max_iters));
    r.get("tol", as_double(c.sparse.tol));
    r.finish();
  }
  {
    Reader r = take("servo");
    r.get("gain", as_double(c.servo.gain));
    r.get("max_steps", as_int(c.servo.max_steps));
    r.get("stop_epsilon", as_double(c.servo.stop_epsilon));
    r.get("stop_fraction", as_double(c.servo.stop_fraction));
    r.get("velocity_clamp", as_double(c.servo.velocity_clamp));
    r.finish();
  }
  if (!sections.empty()) throw ParameterError("unknown config section '" + sections.begin()->first + "'");
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_ini(ss.str());
  } catch (const LoadError& e) {
    throw ParameterError(e.what());
  }
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_ini())); }

nlohmann::json report_header(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["version"] = std::string(kVersion);
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.hash();
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = __VERSION__;
  return j;
}

// ---- training -----------------------------------------------------------------

SimulatedRun record_run(const Scene& scene, const ExperimentConfig& cfg, std::uint64_t seed) {
  return simulate_trajectory(scene, random_trajectory(scene, cfg.record_frames, seed, cfg.waypoint_frames));
}

FeedbackDictionary train_dictionary(const std::vector<FeatureTrack>& tracks, std::size_t n, int n_dic,
                                    std::uint64_t seed, const FeatureSpec& spec, std::vector<std::string> sources) {
  if (tracks.empty()) throw InsufficientData("training needs at least one recording");
  std::vector<FeedbackWord> words;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].frame_rate != tracks.front().frame_rate)
      throw ContractError("recordings disagree on frame rate");
    const std::size_t share = n / tracks.size() + (i < n % tracks.size() ? 1 : 0);
    if (share == 0) continue;
    auto part = sample_pairs(tracks[i], share, derive_seed(seed, "pairs/" + std::to_string(i)));
    words.insert(words.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  FeedbackDictionary dict = build_dictionary(words, n_dic, derive_seed(seed, "kmeans"), spec);
  dict.seed = seed;
  dict.frame_rate = tracks.front().frame_rate;
  dict.sources = std::move(sources);
  return dict;
}

FeedbackDictionary train_default(const ExperimentConfig& cfg, const FeatureSpec& spec) {
  const SimulatedRun run = record_run(cfg.scene, cfg, derive_seed(cfg.seed, "record"));
  const FeatureTrack track = make_track(run, spec, cfg.scene.frame_rate());
  return train_dictionary({track}, static_cast<std::size_t>(cfg.samples_per_word) * cfg.n_dic, cfg.n_dic,
                          derive_seed(cfg.seed, "train"), spec, {"sim:" + std::to_string(cfg.seed)});
}

// ---- held-out regression ---------------------------------------------------------

std::vector<Prediction> predict(const FeedbackDictionary& dict, const std::vector<FeedbackWord>& held_out,
                                const SparseSolverConfig& sparse, double* mean_support) {
  const SparseCoder coder(dict.feature_matrix());
  const Eigen::MatrixXd velocities = dict.velocity_matrix();
  std::vector<Prediction> out;
  out.reserve(held_out.size());
  double support = 0.0;
  for (const auto& w : held_out) {
    const SparseCode code = coder.solve(w.ds, sparse);
    support += static_cast<double>(code.support_size());
    out.push_back({w.dr, velocities * code.beta});
  }
  if (mean_support) *mean_support = held_out.empty() ? 0.0 : support / static_cast<double>(held_out.size());
  return out;
}

double velocity_error(const std::vector<Prediction>& predictions) {
  if (predictions.empty()) throw InsufficientData("no held-out pairs");
  double sum = 0.0;
  for (const auto& p : predictions) sum += (p.predicted - p.actual).norm();
  return sum / static_cast<double>(predictions.size());
}

SplitWords make_split(const ExperimentConfig& cfg, Split split, std::size_t n_train, std::size_t n_test) {
  const FeatureSpec& spec = cfg.scene.features;
  const double fps = cfg.scene.frame_rate();
  ExperimentConfig split_cfg = cfg;
  split_cfg.record_frames = cfg.eval_record_frames;
  const FeatureTrack train = make_track(record_run(cfg.scene, split_cfg, derive_seed(cfg.seed, "record")), spec, fps);
  SplitWords out;
  if (split == Split::SameSubject) {
    auto words = sample_pairs(train, n_train + n_test, derive_seed(cfg.seed, "split-pairs"));
    out.test.assign(words.begin() + static_cast<std::ptrdiff_t>(n_train), words.end());
    words.resize(n_train);
    out.train = std::move(words);
  } else {
    const Scene other = cfg.scene.variant(cfg.variant_stiffness, cfg.variant_camera);
    const FeatureTrack test = make_track(record_run(other, split_cfg, derive_seed(cfg.seed, "record-variant")), spec, fps);
    out.train = sample_pairs(train, n_train, derive_seed(cfg.seed, "split-pairs"));
    out.test = sample_pairs(test, n_test, derive_seed(cfg.seed, "split-pairs-variant"));
  }
  return out;
}

std::vector<SweepRow> velocity_sweep(const ExperimentConfig& cfg, const SplitWords& words) {
  std::vector<SweepRow> rows;
  for (int n_dic : cfg.dict_sizes) {
    const FeedbackDictionary dict =
        build_dictionary(words.train, n_dic, derive_seed(cfg.seed, "kmeans"), cfg.scene.features);
    for (double alpha : cfg.alphas) {
      SparseSolverConfig sc = cfg.sparse;
      sc.alpha = alpha;
      SweepRow row;
      row.n_dic = n_dic;
      row.alpha = alpha;
      row.error = velocity_error(predict(dict, words.test, sc, &row.support));
      rows.push_back(row);
    }
  }
  return rows;
}

// ---- tasks -------------------------------------------------------------------

namespace {

GripperConfig inward(const Scene& scene, double left, double right) {
  Eigen::VectorXd r = scene.nominal().r;
  r[0] += left;
  r[3] -= right;
  return GripperConfig(std::move(r));
}

FeatureVector features_of(const ClothState& state, const Scene& scene, const FeatureSpec& spec) {
  return extract_features(render(state, scene.camera), spec);
}

}  // namespace

TaskSetup make_task(const ExperimentConfig& cfg, Task task, std::uint64_t start_seed, const FeatureSpec& spec) {
  const Scene& scene = cfg.scene;
  const std::uint64_t s = derive_seed(cfg.seed, "start/" + std::to_string(start_seed));
  TaskSetup t;
  switch (task) {
    case Task::Flatten:
    case Task::PerturbedHold: {
      t.start = crumpled_state(scene, s);
      t.goal_states.push_back(flat_state(scene));
      t.goal = GoalSpec::single(features_of(t.goal_states[0], scene, spec));
      if (task == Task::PerturbedHold)
        t.perturbation = corner_tug(scene, cfg.tug_amplitude, cfg.tug_period, 0, cfg.hold_steps);
      break;
    }
    case Task::Fold: {
      // Gather the top edge in two stages; the deeper stage costs more.
      t.start = flat_state(scene);
      const double depth = 0.9 * scene.reach_in;
      for (double f : {0.5, 1.0})
        t.goal_states.push_back(settle(t.start, inward(scene, f * depth, f * depth), scene.sim, 90));
      t.goal.mode = GoalMode::Sequential;
      for (const auto& g : t.goal_states) t.goal.targets.push_back(features_of(g, scene, spec));
      t.goal.costs = {0.0, 1.0};
      const FeatureVector s0 = features_of(t.start, scene, spec);
      t.goal.satisfaction_radius = cfg.success_fraction * (s0 - t.goal.targets[0]).norm();
      break;
    }
    case Task::Placement: {
      // Any of three seeded spreads is acceptable.
      t.start = crumpled_state(scene, s);
      std::mt19937_64 rng(derive_seed(s, "placement"));
      std::uniform_real_distribution<double> depth(0.0, 0.5 * scene.reach_in);
      t.goal.mode = GoalMode::Hidden;
      for (int k = 0; k < 3; ++k) {
        const double l = depth(rng);
        const double r = depth(rng);
        t.goal_states.push_back(settle(flat_state(scene), inward(scene, l, r), scene.sim, 90));
        t.goal.targets.push_back(features_of(t.goal_states.back(), scene, spec));
      }
      break;
    }
  }
  return t;
}

double shape_error(const ClothState& a, const ClothState& b) {
  if (a.positions.size() != b.positions.size()) throw ContractError("shape error needs equal vertex counts");
  if (a.positions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.positions.size(); ++i) sum += (a.positions[i] - b.positions[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(a.positions.size()));
}

TaskOutcome run_task(const ExperimentConfig& cfg, const FeedbackDictionary& dict, const TaskSetup& setup,
                     const ServoEnvironment::FrameHook& on_frame) {
  ServoEnvironment env{cfg.scene.sim, cfg.scene.camera, setup.perturbation, on_frame};
  const auto t0 = std::chrono::steady_clock::now();
  TaskOutcome out;
  out.trace = run_servo(setup.start, env, setup.goal, dict, cfg.sparse, cfg.servo);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const ServoTrace& tr = out.trace;
  out.ratio = tr.initial_error > 0.0 ? tr.final_error / tr.initial_error : 0.0;
  if (setup.goal.mode == GoalMode::Sequential)
    out.success = tr.reason == StopReason::TaskComplete;
  else
    out.success = tr.reason != StopReason::Diverged && out.ratio <= cfg.success_fraction;

  // Shape score against the target the controller ended on (last one once complete).
  // Goals given only as images have no reference shape.
  int target = tr.records.empty() ? 0 : tr.records.back().target;
  if (target < 0) target = static_cast<int>(setup.goal_states.size()) - 1;
  if (target < 0 || static_cast<std::size_t>(target) >= setup.goal_states.size()) {
    out.shape_initial = out.shape_final = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const ClothState& goal_state = setup.goal_states[static_cast<std::size_t>(target)];
  out.shape_initial = shape_error(setup.start, goal_state);
  out.shape_final = shape_error(tr.final_state, goal_state);
  out.shape_success = tr.reason != StopReason::Diverged &&
                      out.shape_final <= cfg.success_fraction * out.shape_initial;
  return out;
}

HoldOutcome run_hold(const ExperimentConfig& cfg, const FeedbackDictionary& dict, const ClothState& settled,
                     const GoalSpec& goal) {
  ServoConfig hold = cfg.servo;
  hold.max_steps = cfg.hold_steps;
  hold.stop_epsilon = 0.0;
  hold.stop_fraction = 0.0;

  ClothState start = settled;
  start.step_index = 0;
  HoldOutcome out;
  ServoEnvironment calm{cfg.scene.sim, cfg.scene.camera, {}, {}};
  out.calm = run_servo(start, calm, goal, dict, cfg.sparse, hold);
  ServoEnvironment tugged = calm;
  tugged.perturbation = corner_tug(cfg.scene, cfg.tug_amplitude, cfg.tug_period, 0, cfg.hold_steps);
  out.perturbed = run_servo(start, tugged, goal, dict, cfg.sparse, hold);

  double sum = 0.0;
  for (const auto& r : out.calm.records) sum += r.error;
  out.steady = sum / static_cast<double>(out.calm.records.size());
  for (const auto& r : out.perturbed.records) out.peak = std::max(out.peak, r.error);
  out.success = out.perturbed.reason != StopReason::Diverged && out.peak < cfg.hold_factor * out.steady;
  return out;
}

nlohmann::json task_report(const ExperimentConfig& cfg, std::uint64_t start_seed, const TaskOutcome& out) {
  nlohmann::json j = report_header(cfg);
  j["task"] = to_string(cfg.task);
  j["start_seed"] = start_seed;
  j["feature_set"] = to_string(cfg.scene.features.set);
  j["initial_error"] = out.trace.initial_error;
  j["final_error"] = out.trace.final_error;
  j["ratio"] = out.ratio;
  j["steps"] = out.trace.steps();
  j["reason"] = to_string(out.trace.reason);
  j["success"] = out.success;
  j["shape_initial"] = out.shape_initial;
  j["shape_final"] = out.shape_final;
  j["shape_success"] = out.shape_success;
  if (!out.trace.message.empty()) j["message"] = out.trace.message;
  return j;
}

}  // namespace clothservo
