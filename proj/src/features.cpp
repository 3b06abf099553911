#include "clothservo/features.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "clothservo/errors.hpp"
#include "clothservo/textio.hpp"

namespace clothservo {

namespace {

int cells_along(int extent, int grid) { return (extent + grid - 1) / grid; }

void normalize_block(Eigen::Ref<Eigen::VectorXd> block, double eps = kNormEpsilon) {
  const double n = block.norm();
  block /= (n + eps);
}

}  // namespace

FeatureLayout FeatureLayout::default_layout() {
  FeatureLayout layout;
  constexpr double pi = std::numbers::pi;
  for (double wavelength : {4.0, 8.0})
    for (double theta : {0.0, pi / 4, pi / 2, 3 * pi / 4})
      layout.filter_bank.push_back(
          GaborParams::with_default_radius(wavelength, theta, 0.0, 0.56 * wavelength, 0.5));
  layout.grid_sizes = {8, 16, 32};
  return layout;
}

void FeatureLayout::validate() const {
  if (filter_bank.empty()) throw ParameterError("feature layout needs at least one filter");
  if (grid_sizes.empty()) throw ParameterError("feature layout needs at least one grid size");
  if (image_width <= 0 || image_height <= 0) throw ParameterError("feature layout image dims must be positive");
  for (const auto& f : filter_bank) f.validate();
  for (int g : grid_sizes)
    if (g < 1 || g > std::min(image_width, image_height))
      throw ParameterError("grid size must lie in [1, min(width, height)]");
}

std::size_t FeatureLayout::feature_length() const {
  std::size_t cells = 0;
  for (int g : grid_sizes)
    cells += static_cast<std::size_t>(cells_along(image_width, g)) * cells_along(image_height, g);
  return filter_bank.size() * cells;
}

std::string FeatureLayout::id() const {
  std::ostringstream os;
  os << image_width << 'x' << image_height << ';' << rectify << ';';
  for (int g : grid_sizes) os << g << ',';
  for (const auto& f : filter_bank)
    os << ';' << format_double(f.wavelength) << ',' << format_double(f.orientation) << ','
       << format_double(f.phase) << ',' << format_double(f.sigma) << ','
       << format_double(f.aspect) << ',' << f.support_radius;
  return "how-" + hex64(fnv1a64(os.str()));
}

FeatureVector operator-(const FeatureVector& a, const FeatureVector& b) {
  if (a.layout_id != b.layout_id || a.values.size() != b.values.size())
    throw LayoutMismatch("cannot subtract features of layout '" + b.layout_id + "' from '" +
                         a.layout_id + "'");
  return {a.values - b.values, a.layout_id};
}

FeatureVector how_features(const Image& image, const Mask& mask, const FeatureLayout& layout) {
  layout.validate();
  if (image.channels() != 1) throw ContractError("how_features expects a single-channel image");
  if (image.width() != layout.image_width || image.height() != layout.image_height)
    throw ContractError("image dimensions do not match the feature layout");
  std::vector<Image> responses;
  responses.reserve(layout.filter_bank.size());
  for (const auto& params : layout.filter_bank) responses.push_back(convolve(image, make_gabor(params)));
  return how_features_from_responses(responses, mask, layout);
}

FeatureVector how_features_from_responses(std::span<const Image> responses, const Mask& mask,
                                          const FeatureLayout& layout) {
  const int w = layout.image_width;
  const int h = layout.image_height;
  if (responses.size() != layout.filter_bank.size())
    throw ContractError("one response per filter is required");
  if (mask.width() != w || mask.height() != h)
    throw ContractError("mask dimensions do not match the feature layout");

  FeatureVector out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.feature_length())), layout.id()};
  Eigen::Index offset = 0;
  for (const Image& resp : responses) {
    if (resp.width() != w || resp.height() != h || resp.channels() != 1)
      throw ContractError("filter response dimensions do not match the feature layout");
    for (int g : layout.grid_sizes) {
      const int ny = cells_along(h, g);
      const Eigen::Index block_len = static_cast<Eigen::Index>(cells_along(w, g)) * ny;
      auto block = out.values.segment(offset, block_len);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!mask.at(x, y)) continue;
          const double v = layout.rectify ? std::abs(resp.at(x, y)) : resp.at(x, y);
          block[static_cast<Eigen::Index>(x / g) * ny + y / g] += v;
        }
      normalize_block(block);
      offset += block_len;
    }
  }
  return out;
}

FeatureVector hog_features(const Image& image, int cell, int bins) {
  if (image.channels() != 1) throw ContractError("hog_features expects a single-channel image");
  if (cell < 1 || cell > std::min(image.width(), image.height()))
    throw ContractError("HOG cell size must lie in [1, min(width, height)]");
  if (bins < 1) throw ParameterError("HOG needs at least one bin");

  const int w = image.width();
  const int h = image.height();
  const int nx = cells_along(w, cell);
  const int ny = cells_along(h, cell);
  const double bin_width = std::numbers::pi / bins;

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx) * ny * bins);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = image.at(std::min(x + 1, w - 1), y) - image.at(std::max(x - 1, 0), y);
      const double gy = image.at(x, std::min(y + 1, h - 1)) - image.at(x, std::max(y - 1, 0));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += std::numbers::pi;
      if (theta >= std::numbers::pi) theta -= std::numbers::pi;
      const double u = theta / bin_width;
      const int b0 = static_cast<int>(std::floor(u)) % bins;
      const double frac = u - std::floor(u);
      const int b1 = (b0 + 1) % bins;
      const Eigen::Index base = (static_cast<Eigen::Index>(x / cell) * ny + y / cell) * bins;
      hist[base + b0] += mag * (1.0 - frac);
      hist[base + b1] += mag * frac;
    }
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(nx) * ny; ++c)
    normalize_block(hist.segment(c * bins, bins), kHogEpsilon);

  std::ostringstream id;
  id << "hog-c" << cell << "b" << bins << "-" << w << "x" << h;
  return {std::move(hist), id.str()};
}

FeatureVector color_histogram(const Image& image, int bins_per_channel) {
  return color_histogram(image, Mask(image.width(), image.height(), true), bins_per_channel);
}

FeatureVector color_histogram(const Image& image, const Mask& mask, int bins_per_channel) {
  if (image.channels() != 3) throw ContractError("color_histogram expects an RGB image");
  if (mask.width() != image.width() || mask.height() != image.height())
    throw ContractError("image and mask dimensions differ");
  if (bins_per_channel < 1) throw ParameterError("color histogram needs at least one bin");

  const int bins = bins_per_channel;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(3 * bins);
  std::size_t count = 0;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (!mask.at(x, y)) continue;
      ++count;
      for (int c = 0; c < 3; ++c) {
        const int b = std::clamp(static_cast<int>(std::floor(image.at(x, y, c) * bins)), 0, bins - 1);
        hist[c * bins + b] += 1.0;
      }
    }
  if (count > 0) hist /= static_cast<double>(count);
  return {std::move(hist), "color-b" + std::to_string(bins)};
}

FeatureVector concat(std::span<const FeatureVector> parts) {
  if (parts.size() == 1) return parts.front();
  Eigen::Index total = 0;
  std::string id;
  for (const auto& p : parts) {
    total += p.size();
    id += (id.empty() ? "" : "+") + p.layout_id;
  }
  FeatureVector out{Eigen::VectorXd(total), id};
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.values.segment(offset, p.size()) = p.values;
    offset += p.size();
  }
  return out;
}

}  // namespace clothservo
