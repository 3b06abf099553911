#include <cmath>
#include <limits>

#include "clothservo/clothsim.hpp"
#include "clothservo/errors.hpp"

namespace clothservo {

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) throw ParameterError("camera image dimensions must be positive");
  if (!(fov > 0.0 && fov < 3.1)) throw ParameterError("camera field of view must lie in (0, pi)");
  const Vec3 f = look_at - eye;
  if (!(f.norm() > 1e-9)) throw ParameterError("camera eye and look-at coincide");
  if (!(f.normalized().cross(up).norm() > 1e-9)) throw ParameterError("camera up is parallel to the view direction");
  if (!(light_dir.norm() > 0.0)) throw ParameterError("light direction must be nonzero");
}

namespace {

struct ScreenPoint {
  double x;
  double y;
  double depth;
  bool valid;
};

constexpr double kNear = 1e-3;

}  // namespace

Image render(const ClothState& state, const CameraModel& camera, Mask* coverage) {
  camera.validate();
  const int W = camera.width;
  const int H = camera.height;
  Image img(W, H, 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = camera.background[c];
  if (coverage) *coverage = Mask(W, H);

  const Vec3 fwd = (camera.look_at - camera.eye).normalized();
  const Vec3 right = fwd.cross(camera.up).normalized();
  const Vec3 up = right.cross(fwd);
  const double focal = 0.5 * H / std::tan(0.5 * camera.fov);
  const Vec3 light = camera.light_dir.normalized();

  std::vector<ScreenPoint> proj(state.positions.size());
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    const Vec3 d = state.positions[i] - camera.eye;
    const double z = d.dot(fwd);
    if (z <= kNear) {
      proj[i] = {0, 0, 0, false};
      continue;
    }
    proj[i] = {0.5 * W + focal * d.dot(right) / z, 0.5 * H - focal * d.dot(up) / z, z, true};
  }

  std::vector<double> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<double>::infinity());
  for (const auto& tri : state.topology->triangles) {
    const ScreenPoint& a = proj[tri[0]];
    const ScreenPoint& b = proj[tri[1]];
    const ScreenPoint& c = proj[tri[2]];
    if (!a.valid || !b.valid || !c.valid) continue;

    const Vec3& pa = state.positions[tri[0]];
    Vec3 n = (state.positions[tri[1]] - pa).cross(state.positions[tri[2]] - pa);
    const double nlen = n.norm();
    if (nlen <= 0.0) continue;
    n /= nlen;
    if (n.dot(camera.eye - pa) < 0.0) n = -n;
    const double shade = camera.ambient + (1.0 - camera.ambient) * std::max(0.0, n.dot(light));

    const double area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (std::abs(area) < 1e-12) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double py = y + 0.5;
        const double w0 = ((b.x - px) * (c.y - py) - (c.x - px) * (b.y - py)) / area;
        const double w1 = ((c.x - px) * (a.y - py) - (a.x - px) * (c.y - py)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double depth = w0 * a.depth + w1 * b.depth + w2 * c.depth;
        double& zb = zbuf[static_cast<std::size_t>(y) * W + x];
        if (depth >= zb) continue;
        zb = depth;
        for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = camera.cloth[ch] * shade;
        if (coverage) coverage->set(x, y, true);
      }
  }
  return quantize8(img);
}

}  // namespace clothservo
