#include <doctest.h>

#include <algorithm>
#include <random>

#include "irstd/metrics.hpp"

using namespace irstd;

namespace {

BinaryMask square(int size, int y0, int x0, int side) {
  BinaryMask m(size, size);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.set(y, x, true);
  return m;
}

}  // namespace

TEST_SUITE("iou") {
  TEST_CASE("worked batch example") {
    const std::vector<SampleCounts> batch = {{2, 4, 4}, {8, 8, 8}};
    CHECK(iou(batch) == doctest::Approx(10.0 / 14.0).epsilon(1e-12));
    CHECK(iou(batch) == doctest::Approx(0.7143).epsilon(1e-4));
    CHECK(niou(batch) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("pixel tallies") {
    const BinaryMask gt = square(8, 1, 1, 3), pred = square(8, 2, 2, 3);
    const SampleCounts c = sample_counts(pred, gt);
    CHECK(c.tp == 4);
    CHECK(c.t == 9);
    CHECK(c.p == 9);
    CHECK(sample_iou(c) == doctest::Approx(4.0 / 14.0));
    CHECK_THROWS_AS(sample_counts(BinaryMask(4, 4), gt), std::invalid_argument);
  }

  TEST_CASE("empty samples follow the chosen policy") {
    const std::vector<SampleCounts> batch = {{0, 0, 0}, {1, 2, 2}};
    CHECK(niou(batch, EmptySamplePolicy::CountAsOne) == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
    CHECK(niou(batch, EmptySamplePolicy::CountAsZero) == doctest::Approx((1.0 / 3.0) / 2.0));
    CHECK(niou(batch, EmptySamplePolicy::Skip) == doctest::Approx(1.0 / 3.0));
    const std::vector<SampleCounts> empty = {{0, 0, 0}};
    CHECK(iou(empty) == 1.0);
  }

  TEST_CASE("batch order does not matter") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> d(0, 50);
    std::vector<SampleCounts> batch;
    for (int i = 0; i < 20; ++i) {
      const std::size_t t = d(rng), p = d(rng);
      batch.push_back({std::min<std::size_t>(std::min(t, p), d(rng)), t, p});
    }
    const double a = iou(batch), b = niou(batch);
    std::shuffle(batch.begin(), batch.end(), rng);
    CHECK(iou(batch) == doctest::Approx(a).epsilon(1e-14));
    CHECK(niou(batch) == doctest::Approx(b).epsilon(1e-14));
  }

  TEST_CASE("bounds") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> d(0, 30);
    for (int i = 0; i < 200; ++i) {
      const std::size_t t = d(rng), p = d(rng);
      const SampleCounts c{std::min(t, p) / 2, t, p};
      const double v = sample_iou(c);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_SUITE("detection rates") {
  TEST_CASE("one pixel inside a target detects it") {
    BinaryMask gt(10, 10), pred(10, 10);
    gt.set(2, 2, true); gt.set(2, 3, true);  // target A
    gt.set(7, 7, true);  // target B
    pred.set(2, 3, true);
    pred.set(0, 9, true); pred.set(9, 0, true);
    const std::vector<BinaryMask> preds = {pred}, gts = {gt};
    const DetectionRates r = detection_rates(preds, gts);
    CHECK(r.targets == 2);
    CHECK(r.detected == 1);
    CHECK(r.false_pixels == 2);
    CHECK(r.pixels == 100);
    CHECK(r.pd() == 0.5);
    CHECK(r.fa() == doctest::Approx(0.02));
  }

  TEST_CASE("perfect and empty predictions") {
    const std::vector<BinaryMask> gts = {square(16, 3, 3, 2), square(16, 10, 10, 3)};
    const DetectionRates perfect = detection_rates(gts, gts);
    CHECK(perfect.pd() == 1.0);
    CHECK(perfect.fa() == 0.0);
    const std::vector<BinaryMask> none = {BinaryMask(16, 16), BinaryMask(16, 16)};
    const DetectionRates empty = detection_rates(none, gts);
    CHECK(empty.pd() == 0.0);
    CHECK(empty.fa() == 0.0);
  }
}

TEST_SUITE("roc") {
  TEST_CASE("extreme thresholds give the end points") {
    GrayImage s(8, 8, 0.1);
    s(4, 4) = 0.9;
    const std::vector<GrayImage> maps = {s};
    const std::vector<BinaryMask> gts = {square(8, 4, 4, 1)};
    const std::vector<double> th = {1.0, -1.0};
    const auto roc = roc_sweep(maps, gts, th);
    REQUIRE(roc.size() == 2);
    CHECK(roc[0].pd == 0.0);
    CHECK(roc[0].fa == 0.0);
    CHECK(roc[1].pd == 1.0);
    CHECK(roc[1].fa == doctest::Approx(63.0 / 64.0));
  }

  TEST_CASE("thresholds must descend strictly") {
    const std::vector<GrayImage> maps = {GrayImage(4, 4)};
    const std::vector<BinaryMask> gts = {BinaryMask(4, 4)};
    const std::vector<double> bad = {0.5, 0.5};
    CHECK_THROWS_AS(roc_sweep(maps, gts, bad), std::invalid_argument);
  }

  TEST_CASE("Pd and Fa are monotone along a random sweep") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GrayImage> maps;
    std::vector<BinaryMask> gts;
    for (int i = 0; i < 4; ++i) {
      GrayImage s(20, 20);
      for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) s(y, x) = u(rng);
      maps.push_back(s);
      gts.push_back(square(20, 2 + 3 * i, 5, 2));
    }
    const auto th = sweep_thresholds(maps, 200);
    REQUIRE(th.size() == 200);
    const auto roc = roc_sweep(maps, gts, th);
    for (std::size_t i = 1; i < roc.size(); ++i) {
      CHECK(roc[i].pd >= roc[i - 1].pd);
      CHECK(roc[i].fa >= roc[i - 1].fa);
    }
    CHECK(roc.front().pd == 0.0);
    CHECK(roc.back().pd == 1.0);
  }

  TEST_CASE("sweep matches a mask-by-mask oracle") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GrayImage> maps;
    std::vector<BinaryMask> gts;
    for (int i = 0; i < 3; ++i) {
      GrayImage s(12, 12);
      for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) s(y, x) = u(rng);
      maps.push_back(s);
      gts.push_back(square(12, 1 + 3 * i, 4, 3));
    }
    const auto th = sweep_thresholds(maps, 37);
    const auto roc = roc_sweep(maps, gts, th);
    for (std::size_t k = 0; k < th.size(); ++k) {
      std::vector<BinaryMask> preds;
      for (const auto& s : maps) {
        BinaryMask m(12, 12);
        for (int y = 0; y < 12; ++y)
          for (int x = 0; x < 12; ++x) m.set(y, x, s(y, x) > th[k]);
        preds.push_back(m);
      }
      const DetectionRates r = detection_rates(preds, gts);
      CHECK(roc[k].pd == r.pd());
      CHECK(roc[k].fa == r.fa());
    }
  }

  TEST_CASE("best Pd under a false-alarm budget") {
    const std::vector<RocPoint> roc = {{0.9, 0.2, 0.0}, {0.5, 0.6, 1e-4}, {0.3, 0.9, 5e-3}, {0.1, 1.0, 0.1}};
    CHECK(pd_at_fa(roc, 0.0) == 0.2);
    CHECK(pd_at_fa(roc, 1e-3) == 0.6);
    CHECK(pd_at_fa(roc, 1.0) == 1.0);
    const std::vector<RocPoint> high = {{0.1, 1.0, 0.5}};
    CHECK(pd_at_fa(high, 1e-3) == 0.0);
  }

  TEST_CASE("csv has a header and one row per point") {
    const std::vector<RocPoint> roc = {{0.9, 0.2, 0.0}, {0.5, 0.6, 1e-4}};
    const std::string csv = roc_csv(roc);
    CHECK(csv.rfind("threshold,fa,pd\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}

TEST_CASE("metric report JSON") {
  MetricReport r;
  r.samples = {{2, 4, 4}, {8, 8, 8}};
  r.ids = {"a", "b"};
  r.iou = iou(r.samples);
  r.niou = niou(r.samples);
  const auto j = to_json(r);
  CHECK(j["iou"].get<double>() == doctest::Approx(10.0 / 14.0));
  CHECK(j["samples"] == 2);
  CHECK(j["per_sample"].size() == 2);
}
