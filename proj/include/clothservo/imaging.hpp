#pragma once

#include <vector>

#include "clothservo/image.hpp"

namespace clothservo {

/// Parameters of one Gabor deformation filter. Lengths are in pixels, angles in radians.
struct GaborParams {
  double wavelength = 8.0;
  double orientation = 0.0;  ///< normal of the stripes; normalized into [0, pi)
  double phase = 0.0;
  double sigma = 4.48;
  double aspect = 0.5;
  int support_radius = 14;

  /// Builds params with the default support radius ceil(3 sigma).
  static GaborParams with_default_radius(double wavelength, double orientation, double phase,
                                         double sigma, double aspect);

  void validate() const;
  bool operator==(const GaborParams&) const = default;
};

/// Square filter kernel of odd size, row-major weights.
struct Kernel {
  int size = 1;
  std::vector<double> weights{1.0};

  int radius() const { return size / 2; }
  double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * size + x]; }

  static Kernel identity(int radius);
  bool operator==(const Kernel&) const = default;
};

double normalize_orientation(double theta);

/// Gaussian envelope modulated by a sine plane wave, sampled on the kernel grid
/// centered at the middle sample.
Kernel make_gabor(const GaborParams& params);

/// 2-D convolution of a single-channel image with clamp-to-edge borders.
/// Output has the input's size and is not clipped.
Image convolve(const Image& image, const Kernel& kernel);

/// 0.299 R + 0.587 G + 0.114 B; single-channel input passes through unchanged.
Image to_luminance(const Image& image);

/// Decides per pixel whether an image shows foreground.
class BackgroundModel {
 public:
  virtual ~BackgroundModel() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual bool is_foreground(const Image& image, int x, int y) const = 0;
};

/// Known uniform background color; a pixel is foreground when any channel
/// differs from it by more than `tolerance`.
class UniformBackground final : public BackgroundModel {
 public:
  UniformBackground(int width, int height, Rgb color, double tolerance = 0.05);

  int width() const override { return width_; }
  int height() const override { return height_; }
  bool is_foreground(const Image& image, int x, int y) const override;

  const Rgb& color() const { return color_; }
  double tolerance() const { return tolerance_; }

 private:
  int width_;
  int height_;
  Rgb color_;
  double tolerance_;
};

Mask segment_foreground(const Image& image, const BackgroundModel& background);

/// Zeroes every pixel outside the mask.
Image apply_mask(const Image& image, const Mask& mask);

}  // namespace clothservo
