#include <doctest.h>

#include <cmath>
#include <fstream>

#include "irstd/error.hpp"
#include "irstd/image_io.hpp"
#include "irstd/imgproc.hpp"
#include "irstd/reference.hpp"
#include "support.hpp"

using namespace irstd;
using testing::max_abs_diff;
using testing::random_image;

TEST_SUITE("image") {
  TEST_CASE("construction validates dims and finiteness") {
    CHECK_THROWS_AS(GrayImage(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>(3, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(GrayImage(1, 2, std::vector<double>{0.0, NAN}), std::invalid_argument);
    const GrayImage img(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(img(1, 2) == 6);
    CHECK(img.min() == 1);
    CHECK(img.max() == 6);
  }

  TEST_CASE("border resolution") {
    CHECK(resolve_index(-1, 5, BorderMode::Replicate) == 0);
    CHECK(resolve_index(7, 5, BorderMode::Replicate) == 4);
    CHECK(resolve_index(-1, 5, BorderMode::Cyclic) == 4);
    CHECK(resolve_index(7, 5, BorderMode::Cyclic) == 2);
    CHECK(resolve_index(3, 5, BorderMode::Cyclic) == 3);
  }

  TEST_CASE("mask union and count") {
    BinaryMask a(2, 2), b(2, 2);
    a.set(0, 0, true);
    b.set(1, 1, true);
    const BinaryMask u = mask_union(a, b);
    CHECK(u.count() == 2);
    CHECK(u(0, 0));
    CHECK(u(1, 1));
    CHECK_THROWS_AS(mask_union(a, BinaryMask(3, 2)), std::invalid_argument);
  }
}

TEST_SUITE("image_io") {
  TEST_CASE("16-bit PNG round trip quantizes to 1/65535") {
    const auto dir = testing::scratch_dir("io16");
    const GrayImage img = random_image(13, 17, 4);
    io::write_image(dir / "a.png", img, io::BitDepth::Sixteen);
    const GrayImage back = io::read_image(dir / "a.png");
    REQUIRE(back.same_dims(13, 17));
    CHECK(max_abs_diff(img, back) <= 0.5 / 65535.0 + 1e-12);
  }

  TEST_CASE("8-bit PGM round trip") {
    const auto dir = testing::scratch_dir("io8");
    const GrayImage img = random_image(5, 9, 5);
    io::write_image(dir / "a.pgm", img, io::BitDepth::Eight);
    const GrayImage back = io::read_image(dir / "a.pgm");
    CHECK(max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-12);
  }

  TEST_CASE("masks are written as 0/255 and read back as nonzero") {
    const auto dir = testing::scratch_dir("iomask");
    BinaryMask m(4, 4);
    m.set(1, 2, true);
    m.set(3, 0, true);
    io::write_mask(dir / "m.png", m);
    CHECK(io::read_mask(dir / "m.png") == m);
    const GrayImage raw = io::read_image(dir / "m.png");
    CHECK(raw(1, 2) == 1.0);
    CHECK(raw(0, 0) == 0.0);
  }

  TEST_CASE("unreadable files raise LoadError naming the path") {
    const auto dir = testing::scratch_dir("iobad");
    std::ofstream(dir / "bad.png") << "\x89PNG\r\n\x1a\n garbage";
    try {
      (void)io::read_image(dir / "bad.png");
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("bad.png") != std::string::npos);
    }
    CHECK_THROWS_AS(io::read_image(dir / "missing.png"), LoadError);
  }
}

TEST_SUITE("filters") {
  TEST_CASE("box_mean of a constant is the constant; n = 1 is identity") {
    const GrayImage c(9, 7, 0.3);
    for (int n : {1, 3, 5, 9}) CHECK(max_abs_diff(box_mean(c, n), c) < 1e-15);
    const GrayImage r = random_image(6, 8, 1);
    CHECK(max_abs_diff(box_mean(r, 1), r) == 0.0);
    CHECK_THROWS_AS(box_mean(r, 4), std::invalid_argument);
  }

  TEST_CASE("box_mean matches direct window averaging") {
    const GrayImage img = random_image(7, 7, 2);
    // Inline oracle for the 7x7, n = 3, Replicate case.
    GrayImage oracle(7, 7);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 7; ++x) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) s += img(std::clamp(y + dy, 0, 6), std::clamp(x + dx, 0, 6));
        oracle(y, x) = s / 9.0;
      }
    CHECK(max_abs_diff(box_mean(img, 3), oracle) <= 1e-12);
    const GrayImage big = random_image(40, 33, 3);
    for (auto border : {BorderMode::Replicate, BorderMode::Cyclic})
      for (int n : {3, 5, 9, 21})
        CHECK(max_abs_diff(box_mean(big, n, border), reference::box_mean(big, n, border)) <= 1e-12);
  }

  TEST_CASE("box_mean preserves the global mean under cyclic borders") {
    const GrayImage img = random_image(16, 12, 4);
    const GrayImage m = box_mean(img, 5, BorderMode::Cyclic);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      a += img.data()[i];
      b += m.data()[i];
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  TEST_CASE("box_mean and shift commute with adding a constant") {
    const GrayImage img = random_image(10, 10, 5);
    std::vector<double> px(img.data());
    for (double& v : px) v += 2.5;
    const GrayImage lifted(10, 10, px);
    const GrayImage a = box_mean(lifted, 5), b = box_mean(img, 5);
    const GrayImage s1 = shift(lifted, 2, -3), s2 = shift(img, 2, -3);
    for (std::size_t i = 0; i < img.size(); ++i) {
      CHECK(a.data()[i] - b.data()[i] == doctest::Approx(2.5).epsilon(1e-12));
      CHECK(s1.data()[i] - s2.data()[i] == doctest::Approx(2.5).epsilon(1e-12));
    }
  }

  TEST_CASE("shift") {
    const GrayImage img = random_image(8, 8, 6);
    CHECK(max_abs_diff(shift(img, 0, 0), img) == 0.0);
    const GrayImage ramp(3, 3, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    const GrayImage rolled = shift(ramp, 1, 0, BorderMode::Cyclic);
    CHECK(rolled.data() == std::vector<double>{3, 4, 5, 6, 7, 8, 0, 1, 2});
    const GrayImage s = shift(img, 2, -1, BorderMode::Replicate);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(s(y, x) == img(std::min(y + 2, 7), std::max(x - 1, 0)));
    CHECK(max_abs_diff(shift(img, -5, 7, BorderMode::Cyclic), reference::shift(img, -5, 7, BorderMode::Cyclic)) == 0.0);
    CHECK_THROWS_AS(shift(img, 8, 0), std::invalid_argument);
    CHECK_THROWS_AS(shift(img, 0, -8), std::invalid_argument);
  }
}

TEST_SUITE("morphology") {
  TEST_CASE("erode and dilate match the serial reference") {
    const GrayImage img = random_image(30, 25, 7);
    for (auto border : {BorderMode::Replicate, BorderMode::Cyclic})
      for (int se : {1, 3, 7, 11}) {
        CHECK(max_abs_diff(erode(img, se, border), reference::erode(img, se, border)) == 0.0);
        CHECK(max_abs_diff(dilate(img, se, border), reference::dilate(img, se, border)) == 0.0);
      }
  }

  TEST_CASE("top-hat of a constant is zero") {
    CHECK(white_tophat(GrayImage(20, 20, 0.7)).max() == 0.0);
  }

  TEST_CASE("small block survives, large plateau is suppressed") {
    GrayImage img(31, 31);
    for (int y = 10; y < 13; ++y)
      for (int x = 10; x < 13; ++x) img(y, x) = 1.0;
    const GrayImage th = white_tophat(img, 11);
    CHECK(max_abs_diff(th, img) == 0.0);

    GrayImage plateau(41, 41);
    for (int y = 10; y < 25; ++y)
      for (int x = 10; x < 25; ++x) plateau(y, x) = 1.0;
    const GrayImage tp = white_tophat(plateau, 11);
    for (int y = 10; y < 25; ++y)
      for (int x = 10; x < 25; ++x) CHECK(tp(y, x) == 0.0);
  }

  TEST_CASE("top-hat lies in [0, max - min]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const GrayImage img = random_image(24, 24, seed, -1.0, 3.0);
      const GrayImage th = white_tophat(img, 5);
      CHECK(th.min() >= 0.0);
      CHECK(th.max() <= img.max() - img.min());
      CHECK(max_abs_diff(th, reference::white_tophat(img, 5)) <= 1e-15);
    }
  }

  TEST_CASE("structuring element validation") {
    const GrayImage img(12, 12);
    CHECK_THROWS_AS(white_tophat(img, 4), std::invalid_argument);
    CHECK_THROWS_AS(white_tophat(img, 1), std::invalid_argument);
  }
}

TEST_SUITE("threshold") {
  TEST_CASE("constant map gives an empty mask") {
    CHECK(adaptive_threshold(GrayImage(5, 5, 0.4), 3.0).count() == 0);
  }

  TEST_CASE("single spike with k = 10") {
    GrayImage m(32, 32);
    m(7, 9) = 100.0;
    // mean = 100/1024, std = sqrt(100^2/1024 - mean^2)
    const double mean = 100.0 / 1024.0;
    const double sd = std::sqrt(1e4 / 1024.0 - mean * mean);
    CHECK(adaptive_threshold_value(m, 10.0) == doctest::Approx(mean + 10.0 * sd).epsilon(1e-12));
    const BinaryMask mask = adaptive_threshold(m, 10.0);
    CHECK(mask.count() == 1);
    CHECK(mask(7, 9));
  }

  TEST_CASE("k = 0 on a two-level map selects pixels above the mean") {
    GrayImage m(4, 4);
    for (int x = 0; x < 4; ++x) m(0, x) = 1.0;
    const BinaryMask mask = adaptive_threshold(m, 0.0);
    CHECK(mask.count() == 4);
    for (int x = 0; x < 4; ++x) CHECK(mask(0, x));
  }

  TEST_CASE("v_min floors the threshold; negative k is rejected") {
    GrayImage m(4, 4);
    m(0, 0) = 0.5;
    CHECK(adaptive_threshold_value(m, 0.0, 0.8) == 0.8);
    CHECK(adaptive_threshold(m, 0.0, 0.8).count() == 0);
    CHECK_THROWS_AS(adaptive_threshold(m, -1.0), std::invalid_argument);
  }

  TEST_CASE("mask is antitone in k") {
    const GrayImage m = random_image(20, 20, 8);
    BinaryMask prev = adaptive_threshold(m, 0.0);
    for (double k : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      const BinaryMask cur = adaptive_threshold(m, k);
      for (std::size_t i = 0; i < cur.size(); ++i)
        if (cur.get(i)) CHECK(prev.get(i));
      prev = cur;
    }
  }
}

TEST_SUITE("components") {
  TEST_CASE("8-connectivity joins diagonal neighbors") {
    BinaryMask m(5, 5);
    m.set(0, 0, true);
    m.set(1, 1, true);
    m.set(3, 3, true);
    m.set(3, 4, true);
    const Components c = label_components(m);
    CHECK(c.count == 2);
    CHECK(c.labels[0] == c.labels[6]);
    CHECK(c.labels[0] != c.labels[3 * 5 + 3]);
    CHECK(c.labels[1] == 0);
  }

  TEST_CASE("flood fill agrees with union-find on random masks") {
    std::mt19937_64 rng(9);
    std::bernoulli_distribution on(0.3);
    for (int trial = 0; trial < 20; ++trial) {
      BinaryMask m(23, 31);
      for (std::size_t i = 0; i < m.size(); ++i) m.set(i, on(rng));
      CHECK(label_components(m).count == reference::count_components(m));
    }
  }
}

TEST_SUITE("patches") {
  TEST_CASE("anchor arithmetic") {
    CHECK(patch_anchors(60, 50, 10, false) == std::vector<int>{0, 10});
    const auto a = patch_anchors(256, 50, 10, true);
    CHECK(a.size() == 22);
    CHECK(a[20] == 200);
    CHECK(a.back() == 206);
    CHECK(patch_anchors(60, 50, 10, true) == std::vector<int>{0, 10});
    CHECK_THROWS_AS(patch_anchors(40, 50, 10, true), std::invalid_argument);
    CHECK_THROWS_AS(patch_anchors(60, 50, 0, true), std::invalid_argument);
    CHECK_THROWS_AS(patch_anchors(60, 10, 11, true), std::invalid_argument);
  }

  TEST_CASE("patch matrix shapes and column content") {
    const GrayImage img = random_image(60, 60, 10);
    const PatchMatrix pm = patchify(img, {50, 10, false});
    CHECK(pm.data.rows() == 2500);
    CHECK(pm.data.cols() == 4);
    CHECK((pm.data - reference::patchify(img, {50, 10, false})).cwiseAbs().maxCoeff() == 0.0);
    CHECK(patchify(GrayImage(256, 256), {}).data.cols() == 484);

    const PatchMatrix whole = patchify(img, {60, 1, true});
    REQUIRE(whole.data.cols() == 1);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(whole.data(static_cast<Eigen::Index>(i), 0) == img.data()[i]);
  }

  TEST_CASE("round trip is the identity for random geometry") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
      const int h = std::uniform_int_distribution<int>(8, 40)(rng);
      const int w = std::uniform_int_distribution<int>(8, 40)(rng);
      const int p = std::uniform_int_distribution<int>(1, std::min(h, w))(rng);
      const int s = std::uniform_int_distribution<int>(1, p)(rng);
      const bool anchor = std::bernoulli_distribution(0.5)(rng);
      const GrayImage img = random_image(h, w, 100 + trial);
      const PatchConfig cfg{p, s, anchor};
      const PatchMatrix pm = patchify(img, cfg);
      const GrayImage back = unpatchify(pm);
      // Without the boundary anchor a margin can stay uncovered and folds to 0.
      const auto& ay = pm.layout.anchors_y;
      const auto& ax = pm.layout.anchors_x;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const bool covered = y < ay.back() + p && x < ax.back() + p;
          CHECK(back(y, x) == doctest::Approx(covered ? img(y, x) : 0.0).epsilon(1e-12));
        }
      CHECK(max_abs_diff(back, unpatchify(pm, Reducer::Median)) <= 1e-12);
      CHECK(max_abs_diff(fold_tensor(patch_tensor(img, cfg)), back) <= 1e-12);
    }
  }

  TEST_CASE("overlap reduction: mean and median") {
    // 2 x 3 image; 2 x 2 windows at x = 0 and x = 1 share column 1.
    const PatchLayout layout = make_patch_layout(2, 3, {2, 1, true});
    REQUIRE(layout.window_count() == 2);
    Eigen::MatrixXd cols(4, 2);
    cols.col(0) << 1, 2, 1, 2;
    cols.col(1) << 6, 9, 6, 9;
    const GrayImage mean = unpatchify(cols, layout, Reducer::Mean);
    CHECK(mean(0, 0) == 1.0);
    CHECK(mean(0, 1) == doctest::Approx((2.0 + 6.0) / 2));
    CHECK(mean(0, 2) == 9.0);
    const GrayImage med = unpatchify(cols, layout, Reducer::Median);
    CHECK(med(0, 1) == doctest::Approx(4.0));
  }

  TEST_CASE("mean fold matches a coverage-count oracle") {
    const PatchLayout layout = make_patch_layout(37, 29, {9, 4, true});
    const Eigen::MatrixXd cols = testing::random_matrix(81, layout.window_count(), 12);
    CHECK(max_abs_diff(unpatchify(cols, layout), reference::unpatchify_mean(cols, layout)) <= 1e-12);
  }

  TEST_CASE("patch tensor slices, unfoldings, folds") {
    const GrayImage img = random_image(60, 60, 13);
    const PatchTensor pt = patch_tensor(img, {50, 10, false});
    CHECK(pt.data.dim(0) == 50);
    CHECK(pt.data.dim(1) == 50);
    CHECK(pt.data.dim(2) == 4);
    const PatchMatrix pm = patchify(img, {50, 10, false});
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 50; i += 7)
        for (int j = 0; j < 50; j += 5) CHECK(pt.data(i, j, k) == pm.data(i * 50 + j, k));

    Tensor3 t(3, 4, 5);
    for (std::size_t e = 0; e < t.size(); ++e) t.data()[e] = static_cast<double>(e);
    for (int mode = 0; mode < 3; ++mode) {
      const Eigen::MatrixXd u = t.unfold(mode);
      CHECK(u.rows() == t.dim(mode));
      CHECK(Tensor3::fold(u, mode, 3, 4, 5).data() == t.data());
    }
    CHECK(t.unfold(0)(2, 1 + 3 * 4) == t(2, 1, 3));
    CHECK(t.unfold(1)(1, 2 + 3 * 3) == t(2, 1, 3));
    CHECK(t.unfold(2)(3, 2 + 1 * 3) == t(2, 1, 3));
  }
}
