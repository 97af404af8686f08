#pragma once

#include <Eigen/Dense>
#include <vector>

#include "irstd/image.hpp"

namespace irstd {

// ---------------------------------------------------------------------------
// Filtering and morphology. All kernels are OpenMP-parallel over rows and
// deterministic: each output pixel is computed by exactly one thread with a
// fixed summation order.
// ---------------------------------------------------------------------------

/// Mean over the n x n window centered at each pixel. n must be odd.
GrayImage box_mean(const GrayImage& img, int n, BorderMode border = BorderMode::Replicate);

/// out(y,x) = img(y+dy, x+dx); requires |dy| < height and |dx| < width.
GrayImage shift(const GrayImage& img, int dy, int dx, BorderMode border = BorderMode::Replicate);

/// Flat square erosion / dilation with an odd side length.
GrayImage erode(const GrayImage& img, int se_size, BorderMode border = BorderMode::Replicate);
GrayImage dilate(const GrayImage& img, int se_size, BorderMode border = BorderMode::Replicate);

/// img - dilate(erode(img)); se_size odd and >= 3.
GrayImage white_tophat(const GrayImage& img, int se_size = 11,
                       BorderMode border = BorderMode::Replicate);

/// Binarize with t = max(v_min, mean + k * stddev) and strict '>'.
BinaryMask adaptive_threshold(const GrayImage& map, double k, double v_min = 0.0);
/// The threshold value adaptive_threshold would use.
double adaptive_threshold_value(const GrayImage& map, double k, double v_min = 0.0);

/// map > t pixelwise.
BinaryMask binarize(const GrayImage& map, double t);

// ---------------------------------------------------------------------------
// Connected components (8-connectivity).
// ---------------------------------------------------------------------------

struct Components {
  /// Per-pixel label, 0 = background, 1..count = component id (row-major
  /// discovery order).
  std::vector<int> labels;
  int count = 0;
};

Components label_components(const BinaryMask& mask);

// ---------------------------------------------------------------------------
// Patch rearrangement.
// ---------------------------------------------------------------------------

struct PatchConfig {
  int patch_size = 50;
  int stride = 10;
  bool boundary_anchor = true;
};

/// Window origins along one axis.
std::vector<int> patch_anchors(int dim, int patch_size, int stride, bool boundary_anchor);

/// Geometry needed to fold patches back onto the source grid.
struct PatchLayout {
  PatchConfig config;
  int source_height = 0;
  int source_width = 0;
  std::vector<int> anchors_y;
  std::vector<int> anchors_x;

  /// Window count; windows are ordered row-major over (anchor_y, anchor_x).
  int window_count() const noexcept { return static_cast<int>(anchors_y.size() * anchors_x.size()); }
  int anchor_y(int k) const noexcept { return anchors_y[k / static_cast<int>(anchors_x.size())]; }
  int anchor_x(int k) const noexcept { return anchors_x[k % static_cast<int>(anchors_x.size())]; }
};

PatchLayout make_patch_layout(int height, int width, const PatchConfig& cfg);

/// Column k is the row-major vectorization of window k.
struct PatchMatrix {
  Eigen::MatrixXd data;
  PatchLayout layout;
};

enum class Reducer { Mean, Median };

PatchMatrix patchify(const GrayImage& img, const PatchConfig& cfg);
/// Fold a (patch_size^2 x windows) matrix back onto the source grid.
GrayImage unpatchify(const Eigen::MatrixXd& columns, const PatchLayout& layout,
                     Reducer reducer = Reducer::Mean);
inline GrayImage unpatchify(const PatchMatrix& pm, Reducer reducer = Reducer::Mean) {
  return unpatchify(pm.data, pm.layout, reducer);
}

/// Dense I x J x P tensor; element (i,j,p) lives at i*J + j + p*I*J, so each
/// frontal slice is one contiguous row-major window.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2, double fill = 0.0);

  int dim(int mode) const noexcept { return dims_[mode]; }
  std::size_t size() const noexcept { return data_.size(); }
  double& operator()(int i, int j, int p) noexcept { return data_[index(i, j, p)]; }
  double operator()(int i, int j, int p) const noexcept { return data_[index(i, j, p)]; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Mode-n unfolding (mode 0, 1 or 2). Mode 0: rows i, columns j + p*J.
  /// Mode 1: rows j, columns i + p*I. Mode 2: rows p, columns i + j*I.
  Eigen::MatrixXd unfold(int mode) const;
  /// Inverse of unfold for a tensor with the given dims.
  static Tensor3 fold(const Eigen::MatrixXd& m, int mode, int d0, int d1, int d2);

  double frobenius_norm() const noexcept;

 private:
  std::size_t index(int i, int j, int p) const noexcept {
    return static_cast<std::size_t>(i) * dims_[1] + j + static_cast<std::size_t>(p) * dims_[0] * dims_[1];
  }
  int dims_[3] = {0, 0, 0};
  std::vector<double> data_;
};

struct PatchTensor {
  Tensor3 data;
  PatchLayout layout;
};

PatchTensor patch_tensor(const GrayImage& img, const PatchConfig& cfg);
GrayImage fold_tensor(const Tensor3& t, const PatchLayout& layout, Reducer reducer = Reducer::Mean);
inline GrayImage fold_tensor(const PatchTensor& pt, Reducer reducer = Reducer::Mean) {
  return fold_tensor(pt.data, pt.layout, reducer);
}

}  // namespace irstd
