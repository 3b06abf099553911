#include "clothservo/imaging.hpp"

#include <cmath>
#include <numbers>

#include "clothservo/errors.hpp"

namespace clothservo {

GaborParams GaborParams::with_default_radius(double wavelength, double orientation, double phase,
                                             double sigma, double aspect) {
  GaborParams p;
  p.wavelength = wavelength;
  p.orientation = normalize_orientation(orientation);
  p.phase = phase;
  p.sigma = sigma;
  p.aspect = aspect;
  p.support_radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  return p;
}

void GaborParams::validate() const {
  if (!(wavelength > 0.0)) throw ParameterError("gabor wavelength must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("gabor sigma must be > 0");
  if (!(aspect > 0.0)) throw ParameterError("gabor aspect must be > 0");
  if (support_radius < 1) throw ParameterError("gabor support radius must be >= 1");
  if (!std::isfinite(orientation) || !std::isfinite(phase))
    throw ParameterError("gabor orientation and phase must be finite");
}

double normalize_orientation(double theta) {
  constexpr double pi = std::numbers::pi;
  double t = std::fmod(theta, pi);
  if (t < 0.0) t += pi;
  if (t >= pi) t = 0.0;
  return t;
}

Kernel Kernel::identity(int radius) {
  Kernel k;
  k.size = 2 * radius + 1;
  k.weights.assign(static_cast<std::size_t>(k.size) * k.size, 0.0);
  k.weights[static_cast<std::size_t>(radius) * k.size + radius] = 1.0;
  return k;
}

Kernel make_gabor(const GaborParams& params) {
  params.validate();
  const double theta = normalize_orientation(params.orientation);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double two_sigma2 = 2.0 * params.sigma * params.sigma;
  const double gamma2 = params.aspect * params.aspect;
  const double k = 2.0 * std::numbers::pi / params.wavelength;

  Kernel kernel;
  const int r = params.support_radius;
  kernel.size = 2 * r + 1;
  kernel.weights.resize(static_cast<std::size_t>(kernel.size) * kernel.size);
  for (int row = 0; row < kernel.size; ++row) {
    const double y = row - r;
    for (int col = 0; col < kernel.size; ++col) {
      const double x = col - r;
      const double xr = x * c + y * s;
      const double yr = -x * s + y * c;
      kernel.weights[static_cast<std::size_t>(row) * kernel.size + col] =
          std::exp(-(xr * xr + gamma2 * yr * yr) / two_sigma2) * std::sin(k * xr + params.phase);
    }
  }
  return kernel;
}

Image convolve(const Image& image, const Kernel& kernel) {
  if (image.channels() != 1)
    throw ContractError("convolve expects a single-channel image; convert to luminance first");
  if (kernel.size < 1 || kernel.size % 2 == 0 ||
      kernel.weights.size() != static_cast<std::size_t>(kernel.size) * kernel.size)
    throw ContractError("kernel must be square with odd size");

  const int w = image.width();
  const int h = image.height();
  const int r = kernel.radius();
  const int pw = w + 2 * r;
  const int ph = h + 2 * r;

  std::vector<double> padded(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::clamp(y - r, 0, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::clamp(x - r, 0, w - 1);
      padded[static_cast<std::size_t>(y) * pw + x] = image.at(sx, sy);
    }
  }

  // out(x,y) = sum_{i,j} K(i,j) I(x - (i-r), y - (j-r)); iterate over kernel taps
  // with the output row innermost so the loop is contiguous.
  Image out(w, h, 1);
  double* dst = out.data().data();
  for (int j = 0; j < kernel.size; ++j) {
    const int oy = 2 * r - j;
    for (int i = 0; i < kernel.size; ++i) {
      const double wgt = kernel.at(i, j);
      if (wgt == 0.0) continue;
      const int ox = 2 * r - i;
      for (int y = 0; y < h; ++y) {
        const double* src = padded.data() + static_cast<std::size_t>(y + oy) * pw + ox;
        double* row = dst + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) row[x] += wgt * src[x];
      }
    }
  }
  return out;
}

Image to_luminance(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.at(x, y) = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
  return out;
}

UniformBackground::UniformBackground(int width, int height, Rgb color, double tolerance)
    : width_(width), height_(height), color_(color), tolerance_(tolerance) {
  if (width <= 0 || height <= 0) throw ParameterError("background dimensions must be positive");
  if (!(tolerance >= 0.0)) throw ParameterError("background tolerance must be >= 0");
}

bool UniformBackground::is_foreground(const Image& image, int x, int y) const {
  if (image.channels() == 1) {
    const double lum = 0.299 * color_[0] + 0.587 * color_[1] + 0.114 * color_[2];
    return std::abs(image.at(x, y) - lum) > tolerance_;
  }
  for (int c = 0; c < 3; ++c)
    if (std::abs(image.at(x, y, c) - color_[c]) > tolerance_) return true;
  return false;
}

Mask segment_foreground(const Image& image, const BackgroundModel& background) {
  if (image.width() != background.width() || image.height() != background.height())
    throw ContractError("image and background model dimensions differ");
  Mask mask(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) mask.set(x, y, background.is_foreground(image, x, y));
  return mask;
}

Image apply_mask(const Image& image, const Mask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height())
    throw ContractError("image and mask dimensions differ");
  Image out = image;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (!mask.at(x, y))
        for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = 0.0;
  return out;
}

}  // namespace clothservo
