#include "clothservo/scene.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "clothservo/errors.hpp"

namespace clothservo {

GripperConfig Workspace::clamp(const GripperConfig& g) const {
  return GripperConfig(g.r.cwiseMax(lower).cwiseMin(upper));
}

bool Workspace::contains(const GripperConfig& g, double slack) const {
  return ((g.r.array() >= lower.array() - slack) && (g.r.array() <= upper.array() + slack)).all();
}

GripperConfig Scene::nominal() const {
  const double half = 0.5 * spread * cloth_size;
  return GripperConfig::from_points({Vec3(-half, 0.0, 0.0), Vec3(half, 0.0, 0.0)});
}

Workspace Scene::workspace() const {
  const double half = 0.5 * spread * cloth_size;
  Workspace ws;
  ws.lower.resize(6);
  ws.upper.resize(6);
  // left gripper: x, y, z
  const double o = reach_offset;
  ws.lower.segment<3>(0) = Vec3(-half - reach_out, -o, -o);
  ws.upper.segment<3>(0) = Vec3(-half + reach_in, o, o);
  // right gripper mirrors the left one
  ws.lower.segment<3>(3) = Vec3(half - reach_in, -o, -o);
  ws.upper.segment<3>(3) = Vec3(half + reach_out, o, o);
  return ws;
}

ClothState Scene::rest_state() const {
  return make_hanging_cloth(rows, cols, cloth_size, Vec3(-0.5 * cloth_size, 0.0, 0.0));
}

Scene Scene::variant(double stiffness_scale, const Vec3& camera_offset) const {
  Scene s = *this;
  s.sim.structural_stiffness *= stiffness_scale;
  s.sim.shear_stiffness *= stiffness_scale;
  s.sim.bend_stiffness *= stiffness_scale;
  s.camera.eye += camera_offset;
  s.camera.look_at += camera_offset;
  return s;
}

ClothState settle(ClothState state, const GripperConfig& target, const SimParams& sim, int frames) {
  for (int i = 0; i < frames; ++i) state = step(state, target, sim);
  return state;
}

ClothState flat_state(const Scene& scene, int frames) {
  return settle(scene.rest_state(), scene.nominal(), scene.sim, frames);
}

ClothState crumpled_state(const Scene& scene, std::uint64_t seed, int frames) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> inward(0.4 * scene.reach_in, 0.9 * scene.reach_in);
  std::uniform_real_distribution<double> offset(-0.75 * scene.reach_offset, 0.75 * scene.reach_offset);
  std::uniform_real_distribution<double> jitter(-scene.crumple_jitter, scene.crumple_jitter);

  const double half = 0.5 * scene.spread * scene.cloth_size;
  const double li = inward(rng);
  const double ri = inward(rng);
  const Vec3 left(-half + li, offset(rng), offset(rng));
  const Vec3 right(half - ri, offset(rng), offset(rng));

  ClothState state = scene.rest_state();
  for (auto& p : state.positions) p.z() += jitter(rng);
  return settle(std::move(state), GripperConfig::from_points({left, right}), scene.sim, frames);
}

std::vector<GripperConfig> random_trajectory(const Scene& scene, int frames, std::uint64_t seed,
                                             int frames_per_waypoint) {
  if (frames < 1) throw ParameterError("a trajectory needs at least one frame");
  if (frames_per_waypoint < 1) throw ParameterError("frames per waypoint must be >= 1");
  std::mt19937_64 rng(seed);
  const Workspace ws = scene.workspace();
  auto draw = [&] {
    Eigen::VectorXd r(ws.lower.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
      r[i] = std::uniform_real_distribution<double>(ws.lower[i], ws.upper[i])(rng);
    return r;
  };

  // Leave room at the speed limit: a segment may not ask for more than 80% of it.
  const double max_step = 0.8 * scene.sim.max_gripper_speed / scene.frame_rate();
  std::vector<GripperConfig> out;
  out.reserve(static_cast<std::size_t>(frames));
  Eigen::VectorXd from = scene.nominal().r;
  while (static_cast<int>(out.size()) < frames) {
    const Eigen::VectorXd to = draw();
    double longest = 0.0;
    for (int g = 0; g < 2; ++g) longest = std::max(longest, (to.segment<3>(3 * g) - from.segment<3>(3 * g)).norm());
    // Smoothstep peaks at 1.5x the mean speed.
    const int len = std::max(frames_per_waypoint, static_cast<int>(std::ceil(1.5 * longest / max_step)));
    for (int k = 1; k <= len && static_cast<int>(out.size()) < frames; ++k) {
      const double u = static_cast<double>(k) / len;
      const double s = u * u * (3.0 - 2.0 * u);
      out.emplace_back(from + s * (to - from));
    }
    from = to;
  }
  return out;
}

SimulatedRun simulate_trajectory(const Scene& scene, const std::vector<GripperConfig>& trajectory) {
  SimulatedRun run;
  ClothState state = flat_state(scene);
  run.frames.reserve(trajectory.size());
  for (const auto& cmd : trajectory) {
    state = step(state, cmd, scene.sim);
    run.frames.push_back(render(state, scene.camera));
    run.configs.push_back(cmd);
  }
  return run;
}

Recording write_recording(const SimulatedRun& run, double frame_rate, const std::filesystem::path& dir,
                          const std::string& log_name) {
  std::filesystem::create_directories(dir / "frames");
  Recording rec;
  rec.frame_rate = frame_rate;
  rec.base_dir = dir;
  rec.id = log_name;
  for (std::size_t i = 0; i < run.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frames/%06zu.png", i);
    save_png(run.frames[i], dir / name);
    rec.frames.push_back({static_cast<long>(i), run.configs[i], name});
  }
  write_recording_log(rec, dir / log_name);
  return rec;
}

FeatureTrack make_track(const SimulatedRun& run, const FeatureSpec& spec, double frame_rate) {
  FeatureTrack track;
  track.frame_rate = frame_rate;
  track.features.reserve(run.frames.size());
  for (const auto& f : run.frames) track.features.push_back(extract_features(f, spec));
  track.configs = run.configs;
  return track;
}

PerturbationScript corner_tug(const Scene& scene, const Vec3& amplitude, double period, long start, long end) {
  ClothState probe = scene.rest_state();
  const auto& topo = *probe.topology;
  PerturbationScript script;
  PerturbationScript::Entry e;
  const int r0 = topo.rows - 1;
  const int c0 = topo.cols - 1;
  for (int r = r0 - 1; r <= r0; ++r)
    for (int c = c0 - 1; c <= c0; ++c) e.vertices.push_back(topo.vertex(r, c));
  e.start = start;
  e.end = end;
  e.shape = PerturbationScript::Shape::Sine;
  e.amplitude = amplitude;
  e.period = period;
  script.entries.push_back(std::move(e));
  return script;
}

}  // namespace clothservo
