#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "irstd/imgproc.hpp"

namespace irstd {

std::vector<int> patch_anchors(int dim, int patch_size, int stride, bool boundary_anchor) {
  if (patch_size < 1 || stride < 1 || stride > patch_size)
    throw std::invalid_argument("patch config requires 1 <= stride <= patch_size");
  if (patch_size > dim)
    throw std::invalid_argument("patch size " + std::to_string(patch_size) + " exceeds image dim " +
                                std::to_string(dim));
  std::vector<int> anchors;
  for (int a = 0; a + patch_size <= dim; a += stride) anchors.push_back(a);
  if (boundary_anchor && anchors.back() != dim - patch_size) anchors.push_back(dim - patch_size);
  return anchors;
}

PatchLayout make_patch_layout(int height, int width, const PatchConfig& cfg) {
  PatchLayout layout;
  layout.config = cfg;
  layout.source_height = height;
  layout.source_width = width;
  layout.anchors_y = patch_anchors(height, cfg.patch_size, cfg.stride, cfg.boundary_anchor);
  layout.anchors_x = patch_anchors(width, cfg.patch_size, cfg.stride, cfg.boundary_anchor);
  return layout;
}

PatchMatrix patchify(const GrayImage& img, const PatchConfig& cfg) {
  PatchMatrix pm;
  pm.layout = make_patch_layout(img.height(), img.width(), cfg);
  const int p = cfg.patch_size;
  const int windows = pm.layout.window_count();
  pm.data.resize(static_cast<Eigen::Index>(p) * p, windows);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < windows; ++k) {
    const int ay = pm.layout.anchor_y(k), ax = pm.layout.anchor_x(k);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) pm.data(i * p + j, k) = img(ay + i, ax + j);
  }
  return pm;
}

namespace {

void check_layout(const PatchLayout& layout) {
  if (layout.anchors_y.empty() || layout.anchors_x.empty() || layout.source_height < 1 ||
      layout.source_width < 1)
    throw std::invalid_argument("patch layout is empty");
  const int p = layout.config.patch_size;
  for (int a : layout.anchors_y)
    if (a < 0 || a + p > layout.source_height) throw std::invalid_argument("patch layout anchor out of range");
  for (int a : layout.anchors_x)
    if (a < 0 || a + p > layout.source_width) throw std::invalid_argument("patch layout anchor out of range");
}

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// Folds windows back; `value(i, j, k)` reads entry (i,j) of window k.
template <typename Value>
GrayImage fold_windows(const PatchLayout& layout, Reducer reducer, Value value) {
  check_layout(layout);
  const int h = layout.source_height, w = layout.source_width, p = layout.config.patch_size;
  const int windows = layout.window_count();
  GrayImage out(h, w);
  if (reducer == Reducer::Mean) {
    std::vector<double> sum(out.size(), 0.0);
    std::vector<int> cover(out.size(), 0);
    // Accumulation in window order keeps the result deterministic.
    for (int k = 0; k < windows; ++k) {
      const int ay = layout.anchor_y(k), ax = layout.anchor_x(k);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          const std::size_t idx = static_cast<std::size_t>(ay + i) * w + ax + j;
          sum[idx] += value(i, j, k);
          ++cover[idx];
        }
    }
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = cover[i] > 0 ? sum[i] / cover[i] : 0.0;
    return out;
  }
  std::vector<std::vector<double>> bins(out.size());
  for (int k = 0; k < windows; ++k) {
    const int ay = layout.anchor_y(k), ax = layout.anchor_x(k);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) bins[static_cast<std::size_t>(ay + i) * w + ax + j].push_back(value(i, j, k));
  }
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = bins[i].empty() ? 0.0 : median_of(bins[i]);
  return out;
}

}  // namespace

GrayImage unpatchify(const Eigen::MatrixXd& columns, const PatchLayout& layout, Reducer reducer) {
  const int p = layout.config.patch_size;
  if (columns.rows() != static_cast<Eigen::Index>(p) * p || columns.cols() != layout.window_count())
    throw std::invalid_argument("patch matrix shape does not match its layout");
  return fold_windows(layout, reducer, [&](int i, int j, int k) { return columns(i * p + j, k); });
}

Tensor3::Tensor3(int d0, int d1, int d2, double fill) : dims_{d0, d1, d2} {
  if (d0 < 1 || d1 < 1 || d2 < 1) throw std::invalid_argument("tensor dims must be >= 1");
  data_.assign(static_cast<std::size_t>(d0) * d1 * d2, fill);
}

Eigen::MatrixXd Tensor3::unfold(int mode) const {
  const int I = dims_[0], J = dims_[1], P = dims_[2];
  Eigen::MatrixXd m;
  switch (mode) {
    case 0:
      m.resize(I, static_cast<Eigen::Index>(J) * P);
      for (int p = 0; p < P; ++p)
        for (int i = 0; i < I; ++i)
          for (int j = 0; j < J; ++j) m(i, j + static_cast<Eigen::Index>(p) * J) = (*this)(i, j, p);
      break;
    case 1:
      m.resize(J, static_cast<Eigen::Index>(I) * P);
      for (int p = 0; p < P; ++p)
        for (int i = 0; i < I; ++i)
          for (int j = 0; j < J; ++j) m(j, i + static_cast<Eigen::Index>(p) * I) = (*this)(i, j, p);
      break;
    case 2:
      m.resize(P, static_cast<Eigen::Index>(I) * J);
      for (int p = 0; p < P; ++p)
        for (int j = 0; j < J; ++j)
          for (int i = 0; i < I; ++i) m(p, i + static_cast<Eigen::Index>(j) * I) = (*this)(i, j, p);
      break;
    default:
      throw std::invalid_argument("tensor mode must be 0, 1 or 2");
  }
  return m;
}

Tensor3 Tensor3::fold(const Eigen::MatrixXd& m, int mode, int d0, int d1, int d2) {
  Tensor3 t(d0, d1, d2);
  const int I = d0, J = d1, P = d2;
  const Eigen::Index rows[3] = {I, J, P};
  const Eigen::Index cols[3] = {static_cast<Eigen::Index>(J) * P, static_cast<Eigen::Index>(I) * P,
                                static_cast<Eigen::Index>(I) * J};
  if (mode < 0 || mode > 2) throw std::invalid_argument("tensor mode must be 0, 1 or 2");
  if (m.rows() != rows[mode] || m.cols() != cols[mode])
    throw std::invalid_argument("unfolded matrix shape does not match tensor dims");
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        double v;
        if (mode == 0)
          v = m(i, j + static_cast<Eigen::Index>(p) * J);
        else if (mode == 1)
          v = m(j, i + static_cast<Eigen::Index>(p) * I);
        else
          v = m(p, i + static_cast<Eigen::Index>(j) * I);
        t(i, j, p) = v;
      }
  return t;
}

double Tensor3::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

PatchTensor patch_tensor(const GrayImage& img, const PatchConfig& cfg) {
  PatchTensor pt;
  pt.layout = make_patch_layout(img.height(), img.width(), cfg);
  const int p = cfg.patch_size;
  const int windows = pt.layout.window_count();
  pt.data = Tensor3(p, p, windows);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < windows; ++k) {
    const int ay = pt.layout.anchor_y(k), ax = pt.layout.anchor_x(k);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) pt.data(i, j, k) = img(ay + i, ax + j);
  }
  return pt;
}

GrayImage fold_tensor(const Tensor3& t, const PatchLayout& layout, Reducer reducer) {
  const int p = layout.config.patch_size;
  if (t.dim(0) != p || t.dim(1) != p || t.dim(2) != layout.window_count())
    throw std::invalid_argument("patch tensor shape does not match its layout");
  return fold_windows(layout, reducer, [&](int i, int j, int k) { return t(i, j, k); });
}

}  // namespace irstd
