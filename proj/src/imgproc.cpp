#include "irstd/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace irstd {

namespace {

void require_odd(int n, int min_value, const char* what) {
  if (n < min_value || n % 2 == 0)
    throw std::invalid_argument(std::string(what) + " must be odd and >= " + std::to_string(min_value) +
                                ", got " + std::to_string(n));
}

// Separable window reduction: `op` folds the n taps of each axis in order.
template <typename Op>
GrayImage separable(const GrayImage& img, int n, BorderMode border, double init, Op op) {
  const int h = img.height(), w = img.width(), r = n / 2;
  GrayImage tmp(h, w), out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = init;
      for (int k = -r; k <= r; ++k) acc = op(acc, img(y, resolve_index(x + k, w, border)));
      tmp(y, x) = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = init;
      for (int k = -r; k <= r; ++k) acc = op(acc, tmp(resolve_index(y + k, h, border), x));
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

GrayImage box_mean(const GrayImage& img, int n, BorderMode border) {
  require_odd(n, 1, "box_mean window");
  if (n == 1) return img;
  GrayImage sums = separable(img, n, border, 0.0, [](double a, double b) { return a + b; });
  const double inv = 1.0 / (static_cast<double>(n) * n);
  for (double& v : sums.pixels()) v *= inv;
  return sums;
}

GrayImage shift(const GrayImage& img, int dy, int dx, BorderMode border) {
  const int h = img.height(), w = img.width();
  if (std::abs(dy) >= h || std::abs(dx) >= w)
    throw std::invalid_argument("shift magnitude must be smaller than the image dims");
  GrayImage out(h, w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int sy = resolve_index(y + dy, h, border);
    for (int x = 0; x < w; ++x) out(y, x) = img(sy, resolve_index(x + dx, w, border));
  }
  return out;
}

GrayImage erode(const GrayImage& img, int se_size, BorderMode border) {
  require_odd(se_size, 1, "structuring element");
  return separable(img, se_size, border, HUGE_VAL, [](double a, double b) { return std::min(a, b); });
}

GrayImage dilate(const GrayImage& img, int se_size, BorderMode border) {
  require_odd(se_size, 1, "structuring element");
  return separable(img, se_size, border, -HUGE_VAL, [](double a, double b) { return std::max(a, b); });
}

GrayImage white_tophat(const GrayImage& img, int se_size, BorderMode border) {
  require_odd(se_size, 3, "top-hat structuring element");
  const GrayImage opened = dilate(erode(img, se_size, border), se_size, border);
  GrayImage out(img.height(), img.width());
  auto o = out.pixels();
  const auto a = img.pixels();
  const auto b = opened.pixels();
  // opening <= img for a flat SE, so the difference is exactly nonnegative.
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] - b[i];
  return out;
}

double adaptive_threshold_value(const GrayImage& map, double k, double v_min) {
  if (!(k >= 0.0)) throw std::invalid_argument("threshold factor k must be >= 0");
  const auto px = map.pixels();
  const double n = static_cast<double>(px.size());
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  var /= n;
  return std::max(v_min, mean + k * std::sqrt(var));
}

BinaryMask binarize(const GrayImage& map, double t) {
  BinaryMask mask(map.height(), map.width());
  const auto px = map.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) mask.set(i, px[i] > t);
  return mask;
}

BinaryMask adaptive_threshold(const GrayImage& map, double k, double v_min) {
  return binarize(map, adaptive_threshold_value(map, k, v_min));
}

Components label_components(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  Components cc;
  cc.labels.assign(mask.size(), 0);
  std::vector<int> stack;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t seed = static_cast<std::size_t>(y0) * w + x0;
      if (!mask.get(seed) || cc.labels[seed] != 0) continue;
      const int id = ++cc.count;
      cc.labels[seed] = id;
      stack.assign(1, static_cast<int>(seed));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cy = cur / w, cx = cur % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (mask.get(ni) && cc.labels[ni] == 0) {
              cc.labels[ni] = id;
              stack.push_back(static_cast<int>(ni));
            }
          }
        }
      }
    }
  }
  return cc;
}

}  // namespace irstd
