#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <memory>
#include <optional>
#include <vector>

#include "clothservo/image.hpp"

namespace clothservo {

using Vec3 = Eigen::Vector3d;

/// Cartesian positions of all grippers stacked into one vector (3 entries per gripper).
struct GripperConfig {
  Eigen::VectorXd r;

  GripperConfig() = default;
  explicit GripperConfig(Eigen::VectorXd values) : r(std::move(values)) {}
  static GripperConfig from_points(const std::vector<Vec3>& points);

  int count() const { return static_cast<int>(r.size() / 3); }
  Eigen::Index dof() const { return r.size(); }
  Vec3 point(int i) const { return r.segment<3>(3 * i); }
};

struct SimParams {
  double structural_stiffness = 300.0;  ///< N/m
  double shear_stiffness = 150.0;       ///< N/m
  double bend_stiffness = 3.0;          ///< N/m
  double damping = 2.0;                 ///< 1/s, velocity damping
  double gravity = 9.81;                ///< m/s^2, along -y
  double timestep = 1.0 / 1500.0;       ///< s per substep
  int substeps = 50;                    ///< substeps per step() call
  double max_gripper_speed = 0.25;      ///< m/s
  double vertex_mass = 0.1 / 289.0;     ///< kg
  std::optional<double> ground_height;  ///< optional floor plane y = h

  double frame_time() const { return timestep * substeps; }
  void validate() const;
};

/// Immutable grid connectivity shared by all states of one cloth.
struct ClothTopology {
  enum class SpringKind { Structural, Shear, Bend };
  struct Spring {
    int a;
    int b;
    double rest;
    SpringKind kind;
  };

  int rows = 0;
  int cols = 0;
  double spacing = 0.0;
  std::vector<Spring> springs;
  std::vector<std::array<int, 3>> triangles;

  int vertex(int row, int col) const { return row * cols + col; }
  int vertex_count() const { return rows * cols; }
};

/// A vertex held either by a gripper or by a fixed anchor (gripper < 0).
struct Pin {
  int vertex = 0;
  int gripper = -1;
  Vec3 anchor = Vec3::Zero();
};

struct ClothState {
  std::shared_ptr<const ClothTopology> topology;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Pin> pins;
  GripperConfig grippers;  ///< actual gripper positions (lag commands when speed-clamped)
  long step_index = 0;

  int vertex_count() const { return static_cast<int>(positions.size()); }
};

/// Flat rows x cols grid of spacing `size/(cols-1)` in the plane spanned by
/// `right` and `down` starting at `origin` (vertex (0,0)); the two top corners
/// are pinned to grippers 0 and 1.
ClothState make_hanging_cloth(int rows, int cols, double size, const Vec3& origin,
                              const Vec3& right = Vec3::UnitX(), const Vec3& down = -Vec3::UnitY());

/// Same topology without pins, for free-body tests.
ClothState make_free_cloth(int rows, int cols, double size, const Vec3& origin);

/// One control frame: `substeps` semi-implicit Euler substeps of springs,
/// gravity and velocity damping. Gripper motion toward `target` is limited to
/// max_gripper_speed * timestep per substep; pinned vertices follow exactly.
/// Throws SimulationDiverged if any coordinate leaves [-1e3, 1e3] or is not finite.
ClothState step(const ClothState& state, const GripperConfig& target, const SimParams& params);

double kinetic_energy(const ClothState& state, const SimParams& params);
/// Kinetic + gravitational + elastic energy.
double mechanical_energy(const ClothState& state, const SimParams& params);

/// Scripted external displacement of vertices, standing in for a human hand.
struct PerturbationScript {
  enum class Shape { Constant, Sine };
  struct Entry {
    std::vector<int> vertices;
    long start = 0;
    long end = 0;  ///< exclusive
    Shape shape = Shape::Constant;
    Vec3 amplitude = Vec3::Zero();
    double period = 30.0;  ///< frames, Sine only
  };
  std::vector<Entry> entries;

  /// Displacement entry `e` applies at frame t. Sine entries move the grasp
  /// along amplitude * sin(2 pi t / period), so each frame shifts by the
  /// increment of that path.
  static Vec3 offset(const Entry& e, long t);
  bool empty() const { return entries.empty(); }
};

ClothState apply_perturbation(const ClothState& state, const PerturbationScript& script, long t);

struct CameraModel {
  Vec3 eye{0.0, 0.15, 0.65};
  Vec3 look_at{0.0, -0.15, 0.0};
  Vec3 up = Vec3::UnitY();
  double fov = 0.58;  ///< vertical, radians
  int width = 128;
  int height = 128;
  Vec3 light_dir = Vec3(-0.45, 0.55, 0.70).normalized();
  Rgb background{0.20, 0.40, 0.80};
  Rgb cloth{0.95, 0.80, 0.60};
  double ambient = 0.15;

  void validate() const;
};

/// Z-buffered flat-shaded rasterization of the cloth triangles, quantized to
/// 8 bits. Shade = ambient + (1 - ambient) * max(0, n . light) with the normal
/// facing the camera. `coverage`, when given, receives the pixels covered by cloth.
Image render(const ClothState& state, const CameraModel& camera, Mask* coverage = nullptr);

}  // namespace clothservo
