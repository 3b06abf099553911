#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "clothservo/image.hpp"
#include "clothservo/imaging.hpp"

namespace clothservo {

/// Filter bank and multi-scale grid that define a HOW descriptor.
struct FeatureLayout {
  std::vector<GaborParams> filter_bank;
  std::vector<int> grid_sizes;
  int image_width = 64;
  int image_height = 64;
  bool rectify = true;

  /// 4 orientations x wavelengths {4, 8}, sigma = 0.56 wavelength, aspect 0.5,
  /// grids {8, 16, 32} on 64x64 images.
  static FeatureLayout default_layout();

  void validate() const;
  std::size_t feature_length() const;
  /// Stable identifier derived from every field.
  std::string id() const;

  bool operator==(const FeatureLayout&) const = default;
};

/// A descriptor tagged with the layout that produced it. Vectors with different
/// layout ids must never be compared or subtracted.
struct FeatureVector {
  Eigen::VectorXd values;
  std::string layout_id;

  Eigen::Index size() const { return values.size(); }
  double norm() const { return values.norm(); }
};

/// Difference of two vectors of the same layout; throws LayoutMismatch otherwise.
FeatureVector operator-(const FeatureVector& a, const FeatureVector& b);

/// Histogram of oriented wrinkles: per filter and grid size, sums the (rectified)
/// filter responses of masked-in pixels into grid cells, L2-normalizes each
/// (filter, grid) block and stacks blocks in (filter, grid, x, y) order.
FeatureVector how_features(const Image& image, const Mask& mask, const FeatureLayout& layout);

/// Same as how_features with precomputed filter responses, one per bank entry.
FeatureVector how_features_from_responses(std::span<const Image> responses, const Mask& mask,
                                          const FeatureLayout& layout);

/// Dense per-cell histogram of unsigned gradient orientation with linear bin
/// interpolation (bin b centered at b*pi/bins) and per-cell normalization
/// v / (|v| + kHogEpsilon).
FeatureVector hog_features(const Image& image, int cell, int bins);

/// Per-channel intensity histograms, each normalized to sum 1 over masked-in pixels.
FeatureVector color_histogram(const Image& image, int bins_per_channel);
FeatureVector color_histogram(const Image& image, const Mask& mask, int bins_per_channel);

/// Stacks vectors end to end under a composite layout id.
FeatureVector concat(std::span<const FeatureVector> parts);

/// Normalization floor used by every L2-normalized block.
inline constexpr double kNormEpsilon = 1e-8;
/// HOG cells use a larger floor so near-uniform cells stay near zero
/// instead of amplifying quantization noise.
inline constexpr double kHogEpsilon = 1.0;

}  // namespace clothservo
