#pragma once

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "irstd/image.hpp"

namespace irstd {

/// Pixel tallies for one sample: true positives, ground-truth positives and
/// predicted positives.
struct SampleCounts {
  std::size_t tp = 0;
  std::size_t t = 0;
  std::size_t p = 0;
};

SampleCounts sample_counts(const BinaryMask& pred, const BinaryMask& gt);

/// How a sample with T = P = 0 enters nIoU.
enum class EmptySamplePolicy { CountAsOne, CountAsZero, Skip };

/// Aggregate IoU: sum TP / sum (T + P - TP). An all-empty batch scores 1.
double iou(std::span<const SampleCounts> batch);
/// Mean of per-sample IoU.
double niou(std::span<const SampleCounts> batch, EmptySamplePolicy empty = EmptySamplePolicy::CountAsOne);
double sample_iou(const SampleCounts& c, EmptySamplePolicy empty = EmptySamplePolicy::CountAsOne);

/// Target-level detection and pixel-level false alarms over a batch.
struct DetectionRates {
  std::size_t targets = 0;
  std::size_t detected = 0;
  std::size_t false_pixels = 0;
  std::size_t pixels = 0;
  double pd() const noexcept { return targets ? static_cast<double>(detected) / targets : 0.0; }
  double fa() const noexcept { return pixels ? static_cast<double>(false_pixels) / pixels : 0.0; }
};

/// A ground-truth target (8-connected component) is detected iff at least
/// one predicted pixel falls inside it; false alarms are predicted pixels
/// outside every target.
DetectionRates detection_rates(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts);

struct RocPoint {
  double threshold = 0.0;
  double pd = 0.0;
  double fa = 0.0;
};

/// Binarizes every map at each threshold (strict '>') and pools Pd/Fa over
/// the batch. Thresholds must be strictly descending. Points come back in
/// sweep order.
std::vector<RocPoint> roc_sweep(std::span<const GrayImage> saliency, std::span<const BinaryMask> gts,
                                std::span<const double> thresholds);

/// `count` evenly spaced thresholds from just above the global max down to
/// just below the global min saliency.
std::vector<double> sweep_thresholds(std::span<const GrayImage> saliency, int count);

/// Best Pd over the points whose Fa does not exceed `max_fa` (0 if none).
double pd_at_fa(std::span<const RocPoint> roc, double max_fa);

std::string roc_csv(std::span<const RocPoint> roc);

struct MetricReport {
  double iou = 0.0;
  double niou = 0.0;
  std::vector<std::string> ids;
  std::vector<SampleCounts> samples;
};

nlohmann::json to_json(const MetricReport& r, EmptySamplePolicy empty = EmptySamplePolicy::CountAsOne);

}  // namespace irstd
