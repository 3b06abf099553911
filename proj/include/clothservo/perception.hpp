#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clothservo/features.hpp"
#include "clothservo/image.hpp"

namespace clothservo {

enum class FeatureSet { How, Hog, Color, HowHog };

std::string to_string(FeatureSet set);
FeatureSet parse_feature_set(const std::string& text);

/// Everything needed to turn a rendered RGB frame into a feature vector:
/// downsample -> segment against the known background -> luminance -> mask ->
/// descriptor(s).
struct FeatureSpec {
  FeatureSet set = FeatureSet::How;
  FeatureLayout how = FeatureLayout::default_layout();
  int downsample = 2;
  int hog_cell = 8;
  int hog_bins = 9;
  int color_bins = 8;
  Rgb background{0.20, 0.40, 0.80};
  double background_tolerance = 0.05;

  int source_width() const { return how.image_width * downsample; }
  int source_height() const { return how.image_height * downsample; }

  std::string layout_id() const;
  std::size_t feature_length() const;

  /// Ordered key/value form, used inside dictionary files and configs.
  std::vector<std::pair<std::string, std::string>> to_entries() const;
  static FeatureSpec from_entries(const std::map<std::string, std::string>& entries);

  bool operator==(const FeatureSpec&) const = default;
};

FeatureVector extract_features(const Image& source_rgb, const FeatureSpec& spec);

}  // namespace clothservo
