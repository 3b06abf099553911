#include "clothservo/clothsim.hpp"

#include <cmath>
#include <numbers>

#include "clothservo/errors.hpp"

namespace clothservo {

GripperConfig GripperConfig::from_points(const std::vector<Vec3>& points) {
  Eigen::VectorXd r(3 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) r.segment<3>(3 * static_cast<Eigen::Index>(i)) = points[i];
  return GripperConfig(std::move(r));
}

void SimParams::validate() const {
  if (!(timestep > 0.0)) throw ParameterError("timestep must be > 0");
  if (substeps < 1) throw ParameterError("substeps must be >= 1");
  if (structural_stiffness < 0.0 || shear_stiffness < 0.0 || bend_stiffness < 0.0)
    throw ParameterError("stiffness must be >= 0");
  if (damping < 0.0) throw ParameterError("damping must be >= 0");
  if (!(max_gripper_speed > 0.0)) throw ParameterError("max gripper speed must be > 0");
  if (!(vertex_mass > 0.0)) throw ParameterError("vertex mass must be > 0");
}

namespace {

std::shared_ptr<const ClothTopology> make_topology(int rows, int cols, double spacing) {
  if (rows < 2 || cols < 2) throw ParameterError("cloth grid needs at least 2x2 vertices");
  auto topo = std::make_shared<ClothTopology>();
  topo->rows = rows;
  topo->cols = cols;
  topo->spacing = spacing;
  using K = ClothTopology::SpringKind;
  const double diag = spacing * std::numbers::sqrt2;
  auto add = [&](int r0, int c0, int r1, int c1, double rest, K kind) {
    if (r1 < 0 || r1 >= rows || c1 < 0 || c1 >= cols) return;
    topo->springs.push_back({topo->vertex(r0, c0), topo->vertex(r1, c1), rest, kind});
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      add(r, c, r, c + 1, spacing, K::Structural);
      add(r, c, r + 1, c, spacing, K::Structural);
      add(r, c, r + 1, c + 1, diag, K::Shear);
      add(r, c, r + 1, c - 1, diag, K::Shear);
      add(r, c, r, c + 2, 2 * spacing, K::Bend);
      add(r, c, r + 2, c, 2 * spacing, K::Bend);
    }
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = topo->vertex(r, c), b = topo->vertex(r, c + 1);
      const int d = topo->vertex(r + 1, c), e = topo->vertex(r + 1, c + 1);
      topo->triangles.push_back({a, d, b});
      topo->triangles.push_back({b, d, e});
    }
  return topo;
}

ClothState make_grid(int rows, int cols, double size, const Vec3& origin, const Vec3& right,
                     const Vec3& down) {
  if (!(size > 0.0)) throw ParameterError("cloth size must be > 0");
  const double spacing = size / (cols - 1);
  ClothState s;
  s.topology = make_topology(rows, cols, spacing);
  s.positions.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) s.positions.push_back(origin + c * spacing * right + r * spacing * down);
  s.velocities.assign(s.positions.size(), Vec3::Zero());
  return s;
}

double stiffness_of(ClothTopology::SpringKind kind, const SimParams& p) {
  switch (kind) {
    case ClothTopology::SpringKind::Structural: return p.structural_stiffness;
    case ClothTopology::SpringKind::Shear: return p.shear_stiffness;
    case ClothTopology::SpringKind::Bend: return p.bend_stiffness;
  }
  return 0.0;
}

}  // namespace

ClothState make_hanging_cloth(int rows, int cols, double size, const Vec3& origin, const Vec3& right,
                              const Vec3& down) {
  ClothState s = make_grid(rows, cols, size, origin, right.normalized(), down.normalized());
  const auto& topo = *s.topology;
  const int left = topo.vertex(0, 0);
  const int rightv = topo.vertex(0, cols - 1);
  s.pins = {Pin{left, 0, Vec3::Zero()}, Pin{rightv, 1, Vec3::Zero()}};
  s.grippers = GripperConfig::from_points({s.positions[left], s.positions[rightv]});
  return s;
}

ClothState make_free_cloth(int rows, int cols, double size, const Vec3& origin) {
  return make_grid(rows, cols, size, origin, Vec3::UnitX(), -Vec3::UnitY());
}

ClothState step(const ClothState& state, const GripperConfig& target, const SimParams& params) {
  params.validate();
  for (const Pin& pin : state.pins) {
    if (pin.vertex < 0 || pin.vertex >= state.vertex_count())
      throw ContractError("pin references an invalid vertex");
    if (pin.gripper >= state.grippers.count() || pin.gripper >= target.count())
      throw ContractError("pin references an invalid gripper");
  }
  if (target.dof() != state.grippers.dof())
    throw ContractError("gripper command has the wrong number of degrees of freedom");

  ClothState next = state;
  const auto& topo = *state.topology;
  const double dt = params.timestep;
  const double inv_m = 1.0 / params.vertex_mass;
  const double max_disp = params.max_gripper_speed * dt;
  const Vec3 g(0.0, -params.gravity, 0.0);
  std::vector<Vec3> force(next.positions.size());
  std::vector<unsigned char> pinned(next.positions.size(), 0);
  for (const Pin& pin : state.pins) pinned[pin.vertex] = 1;

  for (int sub = 0; sub < params.substeps; ++sub) {
    // Advance grippers toward the command, speed-limited per substep.
    Eigen::VectorXd gripper_vel = Eigen::VectorXd::Zero(next.grippers.dof());
    for (int i = 0; i < next.grippers.count(); ++i) {
      Vec3 d = target.point(i) - next.grippers.point(i);
      const double len = d.norm();
      if (len > max_disp) d *= max_disp / len;
      next.grippers.r.segment<3>(3 * i) += d;
      gripper_vel.segment<3>(3 * i) = d / dt;
    }

    std::fill(force.begin(), force.end(), Vec3::Zero());
    for (const auto& sp : topo.springs) {
      const double k = stiffness_of(sp.kind, params);
      if (k == 0.0) continue;
      const Vec3 d = next.positions[sp.b] - next.positions[sp.a];
      const double len = d.norm();
      if (len <= 0.0) continue;
      const Vec3 f = (k * (len - sp.rest) / len) * d;
      force[sp.a] += f;
      force[sp.b] -= f;
    }

    for (std::size_t v = 0; v < next.positions.size(); ++v) {
      if (pinned[v]) continue;
      Vec3& vel = next.velocities[v];
      vel += dt * (force[v] * inv_m + g - params.damping * vel);
      next.positions[v] += dt * vel;
      if (params.ground_height && next.positions[v].y() < *params.ground_height) {
        next.positions[v].y() = *params.ground_height;
        vel.y() = std::max(0.0, vel.y());
      }
    }
    for (const Pin& pin : state.pins) {
      if (pin.gripper >= 0) {
        next.positions[pin.vertex] = next.grippers.point(pin.gripper);
        next.velocities[pin.vertex] = gripper_vel.segment<3>(3 * pin.gripper);
      } else {
        next.positions[pin.vertex] = pin.anchor;
        next.velocities[pin.vertex] = Vec3::Zero();
      }
    }
  }
  ++next.step_index;

  for (const Vec3& p : next.positions)
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e3)
      throw SimulationDiverged("cloth simulation diverged", next.step_index);
  return next;
}

double kinetic_energy(const ClothState& state, const SimParams& params) {
  double e = 0.0;
  for (const Vec3& v : state.velocities) e += v.squaredNorm();
  return 0.5 * params.vertex_mass * e;
}

double mechanical_energy(const ClothState& state, const SimParams& params) {
  double e = kinetic_energy(state, params);
  for (const Vec3& p : state.positions) e += params.vertex_mass * params.gravity * p.y();
  for (const auto& sp : state.topology->springs) {
    const double stretch = (state.positions[sp.b] - state.positions[sp.a]).norm() - sp.rest;
    e += 0.5 * stiffness_of(sp.kind, params) * stretch * stretch;
  }
  return e;
}

Vec3 PerturbationScript::offset(const Entry& e, long t) {
  if (t < e.start || t >= e.end) return Vec3::Zero();
  switch (e.shape) {
    case Shape::Constant: return e.amplitude;
    case Shape::Sine: {
      const double w = 2.0 * std::numbers::pi / e.period;
      const double s0 = std::sin(w * static_cast<double>(t - e.start));
      const double s1 = std::sin(w * static_cast<double>(t - e.start + 1));
      return e.amplitude * (s1 - s0);
    }
  }
  return Vec3::Zero();
}

ClothState apply_perturbation(const ClothState& state, const PerturbationScript& script, long t) {
  if (script.empty()) return state;
  ClothState out = state;
  for (const auto& e : script.entries) {
    for (int v : e.vertices)
      if (v < 0 || v >= state.vertex_count())
        throw ContractError("perturbation script references an invalid vertex");
    const Vec3 d = PerturbationScript::offset(e, t);
    if (d.isZero(0.0)) continue;
    for (int v : e.vertices) out.positions[v] += d;
  }
  return out;
}

}  // namespace clothservo
