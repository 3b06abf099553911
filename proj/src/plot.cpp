#include "clothservo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "clothservo/errors.hpp"

namespace clothservo {
namespace {

// 3x5 glyphs, one row per entry, bit 2 = leftmost column.
struct Glyph {
  char c;
  unsigned char rows[5];
};
constexpr Glyph kFont[] = {
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'e', {0, 7, 7, 4, 7}}, {'+', {0, 2, 7, 2, 0}},
};

class Canvas {
 public:
  Canvas(int w, int h) : img_(w, h, 3, 1.0) {}

  void dot(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= img_.width() || y >= img_.height()) return;
    for (int k = 0; k < 3; ++k) img_.at(x, y, k) = c[static_cast<std::size_t>(k)];
  }

  void line(double x0, double y0, double x1, double y1, const Rgb& c, int dash = 0) {
    const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= n; ++i) {
      if (dash > 0 && (i / dash) % 2 == 1) continue;
      const double t = static_cast<double>(i) / n;
      dot(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }

  void marker(double x, double y, const Rgb& c) {
    const int cx = static_cast<int>(std::lround(x));
    const int cy = static_cast<int>(std::lround(y));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) dot(cx + dx, cy + dy, c);
  }

  /// Text with its top-left corner at (x, y), 2x scaled glyphs.
  void text(int x, int y, const std::string& s, const Rgb& c) {
    for (char ch : s) {
      for (const auto& g : kFont) {
        if (g.c != ch) continue;
        for (int r = 0; r < 5; ++r)
          for (int col = 0; col < 3; ++col)
            if (g.rows[r] & (4 >> col))
              for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) dot(x + 2 * col + sx, y + 2 * r + sy, c);
      }
      x += 8;
    }
  }

  Image take() { return std::move(img_); }

 private:
  Image img_;
};

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e4))
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

Image draw_plot(const PlotSpec& spec) {
  if (spec.width < 100 || spec.height < 80) throw ParameterError("plot canvas too small");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw ParameterError("plot series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0.0)) throw ParameterError("log axis needs positive x");
      const double x = spec.log_x ? std::log10(s.x[i]) : s.x[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin)) throw ParameterError("nothing to plot");
  if (spec.identity_line) {
    xmin = ymin = std::min(xmin, ymin);
    xmax = ymax = std::max(xmax, ymax);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const int left = 70, right = 15, top = 15, bottom = 30;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  Canvas cv(spec.width, spec.height);
  const Rgb black{0, 0, 0}, grid{0.85, 0.85, 0.85};
  for (int k = 0; k <= 4; ++k) {
    const double fy = ymin + (ymax - ymin) * k / 4.0;
    cv.line(left, py(fy), left + pw, py(fy), grid);
    cv.text(4, static_cast<int>(py(fy)) - 5, tick_label(fy), black);
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    cv.line(px(fx), top, px(fx), top + ph, grid);
    const std::string lx = tick_label(spec.log_x ? std::pow(10.0, fx) : fx);
    cv.text(static_cast<int>(px(fx)) - 4 * static_cast<int>(lx.size()), top + static_cast<int>(ph) + 8, lx, black);
  }
  cv.line(left, top, left, top + ph, black);
  cv.line(left, top + ph, left + pw, top + ph, black);
  if (spec.identity_line) cv.line(px(xmin), py(xmin), px(xmax), py(xmax), {0.5, 0.5, 0.5}, 4);

  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x = px(spec.log_x ? std::log10(s.x[i]) : s.x[i]);
      const double y = py(s.y[i]);
      if (s.lines && i > 0) {
        const double x0 = px(spec.log_x ? std::log10(s.x[i - 1]) : s.x[i - 1]);
        cv.line(x0, py(s.y[i - 1]), x, y, s.color);
      }
      if (s.lines || s.x.size() < 2000) cv.marker(x, y, s.color);
      else cv.dot(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)), s.color);
    }
  }
  return cv.take();
}

}  // namespace clothservo
