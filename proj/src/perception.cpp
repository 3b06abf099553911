#include "clothservo/perception.hpp"

#include <array>

#include "clothservo/errors.hpp"
#include "clothservo/imaging.hpp"
#include "clothservo/textio.hpp"

namespace clothservo {

std::string to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::How: return "how";
    case FeatureSet::Hog: return "hog";
    case FeatureSet::Color: return "color";
    case FeatureSet::HowHog: return "how+hog";
  }
  return "how";
}

FeatureSet parse_feature_set(const std::string& text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "how") return FeatureSet::How;
  if (t == "hog") return FeatureSet::Hog;
  if (t == "color" || t == "colour") return FeatureSet::Color;
  if (t == "how+hog" || t == "hog+how") return FeatureSet::HowHog;
  throw ParameterError("unknown feature set '" + text + "'");
}

namespace {

std::string hog_id(const FeatureSpec& s) {
  return "hog-c" + std::to_string(s.hog_cell) + "b" + std::to_string(s.hog_bins) + "-" +
         std::to_string(s.how.image_width) + "x" + std::to_string(s.how.image_height);
}

std::size_t hog_length(const FeatureSpec& s) {
  const std::size_t nx = (s.how.image_width + s.hog_cell - 1) / s.hog_cell;
  const std::size_t ny = (s.how.image_height + s.hog_cell - 1) / s.hog_cell;
  return nx * ny * s.hog_bins;
}

const std::string& require(const std::map<std::string, std::string>& e, const std::string& key) {
  auto it = e.find(key);
  if (it == e.end()) throw LoadError("missing entry", key);
  return it->second;
}

}  // namespace

std::string FeatureSpec::layout_id() const {
  // Preprocessing parameters change the vector content, so they are part of the id.
  const std::string pre = "ds" + std::to_string(downsample) + ":";
  switch (set) {
    case FeatureSet::How: return pre + how.id();
    case FeatureSet::Hog: return pre + hog_id(*this);
    case FeatureSet::Color: return pre + "color-b" + std::to_string(color_bins);
    case FeatureSet::HowHog: return pre + how.id() + "+" + hog_id(*this);
  }
  return {};
}

std::size_t FeatureSpec::feature_length() const {
  switch (set) {
    case FeatureSet::How: return how.feature_length();
    case FeatureSet::Hog: return hog_length(*this);
    case FeatureSet::Color: return 3 * static_cast<std::size_t>(color_bins);
    case FeatureSet::HowHog: return how.feature_length() + hog_length(*this);
  }
  return 0;
}

std::vector<std::pair<std::string, std::string>> FeatureSpec::to_entries() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("feature_set", to_string(set));
  e.emplace_back("image_width", std::to_string(how.image_width));
  e.emplace_back("image_height", std::to_string(how.image_height));
  e.emplace_back("downsample", std::to_string(downsample));
  e.emplace_back("rectify", how.rectify ? "1" : "0");
  std::string grids;
  for (int g : how.grid_sizes) grids += (grids.empty() ? "" : " ") + std::to_string(g);
  e.emplace_back("grid_sizes", grids);
  e.emplace_back("filters", std::to_string(how.filter_bank.size()));
  for (std::size_t i = 0; i < how.filter_bank.size(); ++i) {
    const auto& f = how.filter_bank[i];
    e.emplace_back("filter." + std::to_string(i),
                   format_double(f.wavelength) + " " + format_double(f.orientation) + " " +
                       format_double(f.phase) + " " + format_double(f.sigma) + " " +
                       format_double(f.aspect) + " " + std::to_string(f.support_radius));
  }
  e.emplace_back("hog_cell", std::to_string(hog_cell));
  e.emplace_back("hog_bins", std::to_string(hog_bins));
  e.emplace_back("color_bins", std::to_string(color_bins));
  e.emplace_back("background", format_double(background[0]) + " " + format_double(background[1]) +
                                   " " + format_double(background[2]));
  e.emplace_back("background_tolerance", format_double(background_tolerance));
  return e;
}

FeatureSpec FeatureSpec::from_entries(const std::map<std::string, std::string>& e) {
  FeatureSpec s;
  try {
    s.set = parse_feature_set(require(e, "feature_set"));
  } catch (const ParameterError& err) {
    throw LoadError(err.what(), "feature_set");
  }
  s.how.image_width = static_cast<int>(parse_int(require(e, "image_width"), "image_width"));
  s.how.image_height = static_cast<int>(parse_int(require(e, "image_height"), "image_height"));
  s.downsample = static_cast<int>(parse_int(require(e, "downsample"), "downsample"));
  s.how.rectify = parse_int(require(e, "rectify"), "rectify") != 0;
  s.how.grid_sizes.clear();
  for (auto tok : split_ws(require(e, "grid_sizes")))
    s.how.grid_sizes.push_back(static_cast<int>(parse_int(tok, "grid_sizes")));
  const auto nf = parse_int(require(e, "filters"), "filters");
  if (nf < 0 || nf > 4096) throw LoadError("implausible filter count", "filters");
  s.how.filter_bank.clear();
  for (long long i = 0; i < nf; ++i) {
    const std::string key = "filter." + std::to_string(i);
    auto tok = split_ws(require(e, key));
    if (tok.size() != 6) throw LoadError("filter entry needs 6 values", key);
    GaborParams p;
    p.wavelength = parse_double(tok[0], key);
    p.orientation = parse_double(tok[1], key);
    p.phase = parse_double(tok[2], key);
    p.sigma = parse_double(tok[3], key);
    p.aspect = parse_double(tok[4], key);
    p.support_radius = static_cast<int>(parse_int(tok[5], key));
    s.how.filter_bank.push_back(p);
  }
  s.hog_cell = static_cast<int>(parse_int(require(e, "hog_cell"), "hog_cell"));
  s.hog_bins = static_cast<int>(parse_int(require(e, "hog_bins"), "hog_bins"));
  s.color_bins = static_cast<int>(parse_int(require(e, "color_bins"), "color_bins"));
  auto bg = split_ws(require(e, "background"));
  if (bg.size() != 3) throw LoadError("background needs 3 values", "background");
  for (int c = 0; c < 3; ++c) s.background[c] = parse_double(bg[c], "background");
  s.background_tolerance = parse_double(require(e, "background_tolerance"), "background_tolerance");
  try {
    s.how.validate();
  } catch (const ParameterError& err) {
    throw LoadError(err.what(), "layout");
  }
  return s;
}

FeatureVector extract_features(const Image& source_rgb, const FeatureSpec& spec) {
  if (source_rgb.channels() != 3) throw ContractError("feature extraction expects an RGB frame");
  if (source_rgb.width() != spec.source_width() || source_rgb.height() != spec.source_height())
    throw ContractError("frame dimensions do not match the feature spec");

  const Image rgb = downsample(source_rgb, spec.downsample);
  const UniformBackground bg(rgb.width(), rgb.height(), spec.background, spec.background_tolerance);
  const Mask mask = segment_foreground(rgb, bg);
  const Image lum = apply_mask(to_luminance(rgb), mask);

  auto how = [&] { return how_features(lum, mask, spec.how); };
  auto hog = [&] { return hog_features(lum, spec.hog_cell, spec.hog_bins); };

  FeatureVector out;
  switch (spec.set) {
    case FeatureSet::How: out = how(); break;
    case FeatureSet::Hog: out = hog(); break;
    case FeatureSet::Color: out = color_histogram(rgb, mask, spec.color_bins); break;
    case FeatureSet::HowHog: {
      const std::array parts{how(), hog()};
      out = concat(parts);
      break;
    }
  }
  out.layout_id = spec.layout_id();
  return out;
}

}  // namespace clothservo
