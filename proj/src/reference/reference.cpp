#include "irstd/reference.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace irstd::reference {

namespace {

void require_odd(int n, const char* what) {
  if (n < 1 || n % 2 == 0) throw std::invalid_argument(std::string(what) + ": window must be odd and >= 1");
}

template <class Reduce>
GrayImage window_reduce(const GrayImage& img, int n, BorderMode border, double init, Reduce reduce,
                        bool average) {
  const int r = n / 2;
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double acc = init;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) acc = reduce(acc, img.at(y + dy, x + dx, border));
      out(y, x) = average ? acc / (static_cast<double>(n) * n) : acc;
    }
  return out;
}

}  // namespace

GrayImage box_mean(const GrayImage& img, int n, BorderMode border) {
  require_odd(n, "box_mean");
  return window_reduce(img, n, border, 0.0, std::plus<>{}, true);
}

GrayImage shift(const GrayImage& img, int dy, int dx, BorderMode border) {
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(y, x) = img.at(y + dy, x + dx, border);
  return out;
}

GrayImage erode(const GrayImage& img, int se_size, BorderMode border) {
  require_odd(se_size, "erode");
  return window_reduce(img, se_size, border, std::numeric_limits<double>::infinity(),
                       [](double a, double b) { return std::min(a, b); }, false);
}

GrayImage dilate(const GrayImage& img, int se_size, BorderMode border) {
  require_odd(se_size, "dilate");
  return window_reduce(img, se_size, border, -std::numeric_limits<double>::infinity(),
                       [](double a, double b) { return std::max(a, b); }, false);
}

GrayImage white_tophat(const GrayImage& img, int se_size, BorderMode border) {
  const GrayImage open = reference::dilate(reference::erode(img, se_size, border), se_size, border);
  GrayImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(y, x) = img(y, x) - open(y, x);
  return out;
}

Eigen::MatrixXd patchify(const GrayImage& img, const PatchConfig& cfg) {
  const PatchLayout layout = make_patch_layout(img.height(), img.width(), cfg);
  const int p = cfg.patch_size;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p) * p, layout.window_count());
  for (int k = 0; k < layout.window_count(); ++k)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) m(i * p + j, k) = img(layout.anchor_y(k) + i, layout.anchor_x(k) + j);
  return m;
}

GrayImage unpatchify_mean(const Eigen::MatrixXd& columns, const PatchLayout& layout) {
  const int p = layout.config.patch_size;
  GrayImage out(layout.source_height, layout.source_width);
  for (int y = 0; y < layout.source_height; ++y)
    for (int x = 0; x < layout.source_width; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int k = 0; k < layout.window_count(); ++k) {
        const int i = y - layout.anchor_y(k), j = x - layout.anchor_x(k);
        if (i < 0 || j < 0 || i >= p || j >= p) continue;
        sum += columns(i * p + j, k);
        ++count;
      }
      out(y, x) = count > 0 ? sum / count : 0.0;
    }
  return out;
}

GrayImage mpcm(const GrayImage& img, const std::vector<int>& scales, BorderMode border, bool clamp_negative) {
  static constexpr int ry[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  static constexpr int rx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  GrayImage out(img.height(), img.width(), -std::numeric_limits<double>::infinity());
  for (int n : scales) {
    require_odd(n, "mpcm");
    const int r = n / 2;
    auto cell_mean = [&](int cy, int cx) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) s += img.at(cy + dy, cx + dx, border);
      return s / (static_cast<double>(n) * n);
    };
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const double m0 = cell_mean(y, x);
        double d[8];
        for (int i = 0; i < 8; ++i) {
          const int cy = resolve_index(y + ry[i] * n, img.height(), border);
          const int cx = resolve_index(x + rx[i] * n, img.width(), border);
          d[i] = m0 - cell_mean(cy, cx);
        }
        double v = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 4; ++i) v = std::min(v, d[i] * d[i + 4]);
        out(y, x) = std::max(out(y, x), v);
      }
  }
  if (clamp_negative)
    for (double& v : out.pixels()) v = std::max(v, 0.0);
  return out;
}

int count_components(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  std::vector<int> parent(static_cast<std::size_t>(h) * w);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      for (int dy = -1; dy <= 0; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx >= 0) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || xx >= w || !mask(yy, xx)) continue;
          parent[find(y * w + x)] = find(yy * w + xx);
        }
    }
  int count = 0;
  for (int i = 0; i < h * w; ++i)
    if (mask.get(i) && find(i) == i) ++count;
  return count;
}

}  // namespace irstd::reference
