#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace clothservo {

using Rgb = std::array<double, 3>;

/// Dense row-major image with 1 (luminance) or 3 (RGB) interleaved channels.
///
/// Source images hold intensities in [0,1]; filter responses reuse the same
/// type with arbitrary finite values.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Per-pixel foreground flags (true = cloth).
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<unsigned char> bits_;
};

/// Averages non-overlapping factor x factor blocks. Dimensions must divide evenly.
Image downsample(const Image& image, int factor);

/// Rounds every sample to the nearest of 256 levels, as an 8-bit sensor would.
Image quantize8(const Image& image);

/// 8-bit PNG I/O; intensities map linearly between [0,1] and [0,255].
Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

}  // namespace clothservo
