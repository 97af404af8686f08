#include "irstd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "irstd/imgproc.hpp"

namespace irstd {

SampleCounts sample_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_dims(gt.height(), gt.width())) throw std::invalid_argument("sample_counts: dim mismatch");
  SampleCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.get(i), g = gt.get(i);
    c.tp += p && g;
    c.t += g;
    c.p += p;
  }
  return c;
}

double sample_iou(const SampleCounts& c, EmptySamplePolicy empty) {
  const std::size_t uni = c.t + c.p - c.tp;
  if (uni == 0) return empty == EmptySamplePolicy::CountAsOne ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double iou(std::span<const SampleCounts> batch) {
  if (batch.empty()) throw std::invalid_argument("iou: empty batch");
  std::size_t inter = 0, uni = 0;
  for (const auto& c : batch) {
    inter += c.tp;
    uni += c.t + c.p - c.tp;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double niou(std::span<const SampleCounts> batch, EmptySamplePolicy empty) {
  if (batch.empty()) throw std::invalid_argument("niou: empty batch");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : batch) {
    if (empty == EmptySamplePolicy::Skip && c.t + c.p == 0) continue;
    sum += sample_iou(c, empty);
    ++n;
  }
  return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

namespace {

void check_batch(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("prediction and ground-truth batches differ in length");
  if (a == 0) throw std::invalid_argument("empty batch");
}

struct LabeledTruth {
  Components cc;
  int height = 0, width = 0;
};

// Accumulates detection statistics for a single predicate over one sample.
template <typename Predicted>
void tally(const LabeledTruth& truth, Predicted predicted, DetectionRates& acc, std::vector<std::uint8_t>& hit) {
  hit.assign(static_cast<std::size_t>(truth.cc.count) + 1, 0);
  const std::size_t n = truth.cc.labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!predicted(i)) continue;
    const int label = truth.cc.labels[i];
    if (label > 0)
      hit[label] = 1;
    else
      ++acc.false_pixels;
  }
  acc.targets += truth.cc.count;
  for (int k = 1; k <= truth.cc.count; ++k) acc.detected += hit[k];
  acc.pixels += n;
}

}  // namespace

DetectionRates detection_rates(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts) {
  check_batch(preds.size(), gts.size());
  DetectionRates acc;
  std::vector<std::uint8_t> hit;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (!preds[s].same_dims(gts[s].height(), gts[s].width()))
      throw std::invalid_argument("detection_rates: dim mismatch");
    const LabeledTruth truth{label_components(gts[s]), gts[s].height(), gts[s].width()};
    tally(truth, [&](std::size_t i) { return preds[s].get(i); }, acc, hit);
  }
  return acc;
}

std::vector<RocPoint> roc_sweep(std::span<const GrayImage> saliency, std::span<const BinaryMask> gts,
                                std::span<const double> thresholds) {
  check_batch(saliency.size(), gts.size());
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] < thresholds[i - 1])) throw std::invalid_argument("roc_sweep: thresholds must be strictly descending");
  std::vector<LabeledTruth> truth;
  std::size_t total_targets = 0;
  for (std::size_t s = 0; s < gts.size(); ++s) {
    if (!gts[s].same_dims(saliency[s].height(), saliency[s].width()))
      throw std::invalid_argument("roc_sweep: dim mismatch");
    truth.push_back({label_components(gts[s]), gts[s].height(), gts[s].width()});
    total_targets += truth.back().cc.count;
  }
  if (total_targets == 0) throw std::invalid_argument("roc_sweep: batch contains no targets");

  std::vector<RocPoint> out(thresholds.size());
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(thresholds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const double thr = thresholds[k];
    DetectionRates acc;
    std::vector<std::uint8_t> hit;
    for (std::size_t s = 0; s < saliency.size(); ++s) {
      const auto px = saliency[s].pixels();
      tally(truth[s], [&](std::size_t i) { return px[i] > thr; }, acc, hit);
    }
    out[k] = {thr, acc.pd(), acc.fa()};
  }
  return out;
}

std::vector<double> sweep_thresholds(std::span<const GrayImage> saliency, int count) {
  if (count < 2) throw std::invalid_argument("sweep_thresholds: need at least 2 thresholds");
  if (saliency.empty()) throw std::invalid_argument("sweep_thresholds: empty batch");
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& s : saliency) {
    lo = std::min(lo, s.min());
    hi = std::max(hi, s.max());
  }
  const double pad = std::max(1e-12, 1e-9 * std::max(std::abs(lo), std::abs(hi)));
  hi += pad;
  lo -= pad;
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[i] = hi - (hi - lo) * i / (count - 1);
  return t;
}

double pd_at_fa(std::span<const RocPoint> roc, double max_fa) {
  double best = 0.0;
  for (const auto& p : roc)
    if (p.fa <= max_fa) best = std::max(best, p.pd);
  return best;
}

std::string roc_csv(std::span<const RocPoint> roc) {
  std::string out = "threshold,fa,pd\n";
  char line[96];
  for (const auto& p : roc) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", p.threshold, p.fa, p.pd);
    out += line;
  }
  return out;
}

nlohmann::json to_json(const MetricReport& r, EmptySamplePolicy empty) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& c = r.samples[i];
    nlohmann::json e = {{"tp", c.tp}, {"t", c.t}, {"p", c.p}, {"iou", sample_iou(c, empty)}};
    if (i < r.ids.size()) e["id"] = r.ids[i];
    per.push_back(e);
  }
  return {{"iou", r.iou}, {"niou", r.niou}, {"samples", r.samples.size()}, {"per_sample", per}};
}

}  // namespace irstd
