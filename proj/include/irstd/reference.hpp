#pragma once

#include <Eigen/Dense>

#include "irstd/image.hpp"
#include "irstd/imgproc.hpp"

// Serial, direct-definition kernels. Each loops over the full window per
// pixel with no separability or shifting tricks; tests compare the
// optimized kernels against these.
namespace irstd::reference {

GrayImage box_mean(const GrayImage& img, int n, BorderMode border = BorderMode::Replicate);
GrayImage shift(const GrayImage& img, int dy, int dx, BorderMode border = BorderMode::Replicate);
GrayImage erode(const GrayImage& img, int se_size, BorderMode border = BorderMode::Replicate);
GrayImage dilate(const GrayImage& img, int se_size, BorderMode border = BorderMode::Replicate);
GrayImage white_tophat(const GrayImage& img, int se_size, BorderMode border = BorderMode::Replicate);

/// Per-pixel mean and max over every window that covers the pixel.
Eigen::MatrixXd patchify(const GrayImage& img, const PatchConfig& cfg);
GrayImage unpatchify_mean(const Eigen::MatrixXd& columns, const PatchLayout& layout);

/// Contrast measure evaluated straight from the cell definitions.
GrayImage mpcm(const GrayImage& img, const std::vector<int>& scales, BorderMode border, bool clamp_negative);

/// Union-find labelling, for cross-checking the flood fill.
int count_components(const BinaryMask& mask);

}  // namespace irstd::reference
