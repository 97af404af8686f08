#include "irstd/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace irstd {

namespace {
void check_dims(int height, int width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("image dims must be >= 1, got " + std::to_string(height) + "x" +
                                std::to_string(width));
}
}  // namespace

GrayImage::GrayImage(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

GrayImage::GrayImage(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("image data length does not match dims");
  if (!all_finite()) throw std::invalid_argument("image contains non-finite values");
}

double GrayImage::min() const {
  if (data_.empty()) throw std::invalid_argument("min of empty image");
  return *std::min_element(data_.begin(), data_.end());
}

double GrayImage::max() const {
  if (data_.empty()) throw std::invalid_argument("max of empty image");
  return *std::max_element(data_.begin(), data_.end());
}

bool GrayImage::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

BinaryMask::BinaryMask(int height, int width, bool fill) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_dims(b.height(), b.width())) throw std::invalid_argument("mask_union: dim mismatch");
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.get(i) || b.get(i));
  return out;
}

}  // namespace irstd
