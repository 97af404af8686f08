#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace irstd {

/// Out-of-range index handling for filters and shifts.
enum class BorderMode { Replicate, Cyclic };

/// Map a possibly out-of-range index into [0, n) under the border rule.
inline int resolve_index(int i, int n, BorderMode border) noexcept {
  if (i >= 0 && i < n) return i;
  if (border == BorderMode::Replicate) return i < 0 ? 0 : n - 1;
  int r = i % n;
  return r < 0 ? r + n : r;
}

/// Row-major single-channel floating-point image. Intensities are
/// normalized to [0,1] on load but arbitrary finite values are allowed.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, double fill = 0.0);
  GrayImage(int height, int width, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator()(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Pixel lookup with out-of-range coordinates resolved by `border`.
  double at(int y, int x, BorderMode border) const noexcept {
    return (*this)(resolve_index(y, height_, border), resolve_index(x, width_, border));
  }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double min() const;
  double max() const;
  bool all_finite() const noexcept;
  bool same_dims(int h, int w) const noexcept { return h == height_ && w == width_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Row-major binary mask; stored as bytes holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool operator()(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) noexcept { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  bool get(std::size_t i) const noexcept { return data_[i] != 0; }
  void set(std::size_t i, bool v) noexcept { data_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept;
  bool any() const noexcept { return count() > 0; }
  bool same_dims(int h, int w) const noexcept { return h == height_ && w == width_; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Element-wise union; dims must match.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

}  // namespace irstd
