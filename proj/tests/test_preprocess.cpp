#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>

#include "palmline/error.hpp"
#include "palmline/model.hpp"
#include "palmline/preprocess.hpp"
#include "palmline/synth.hpp"
#include "oracles.hpp"

using namespace palmline;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

BinaryMask ellipse_mask(std::size_t w, std::size_t h, double cx, double cy, double a, double b) {
  BinaryMask m(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double u = (static_cast<double>(x) - cx) / a, v = (static_cast<double>(y) - cy) / b;
      m.set(y, x, u * u + v * v <= 1.0);
    }
  return m;
}

ImageRgb paint(const BinaryMask& m, std::array<float, 3> fg, std::array<float, 3> bg) {
  ImageRgb img(m.width, m.height);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < m.height; ++y)
      for (std::size_t x = 0; x < m.width; ++x) img.at(c, y, x) = m.at(y, x) ? fg[c] : bg[c];
  return img;
}

double sample_bilinear(const ImageRgb& img, std::size_t c, double x, double y) {
  const auto x0 = static_cast<std::size_t>(std::floor(x)), y0 = static_cast<std::size_t>(std::floor(y));
  const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
  auto px = [&](std::size_t yy, std::size_t xx) {
    return static_cast<double>(img.at(c, std::min(yy, img.height - 1), std::min(xx, img.width - 1)));
  };
  return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) + fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

}  // namespace

TEST_CASE("downscale dimensions") {
  CHECK(downscale(ImageRgb(100, 100), 0.7).width == 70);
  const ImageRgb wide = downscale(ImageRgb(200, 100), 0.7);
  CHECK(wide.width == 140);
  CHECK(wide.height == 70);
  CHECK(downscale(ImageRgb(1, 1), 0.1).width == 1);

  ImageRgb img(13, 9);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  for (float& v : img.pixels) v = u(rng);
  CHECK(downscale(img, 1.0) == img);
}

TEST_CASE("config validation") {
  PreprocessConfig c;
  CHECK_NOTHROW(c.validate());
  c.downscale_factor = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.downscale_factor = 1.2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.percentile_low = 60;
  c.percentile_high = 40;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("k-means recovers a bright ellipse exactly") {
  const BinaryMask truth = ellipse_mask(120, 90, 60, 45, 35, 25);
  const ImageRgb img = paint(truth, {200, 170, 150}, {30, 30, 30});
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) CHECK(mask_iou(kmeans_segment(img, seed), truth) == 1.0);
}

TEST_CASE("k-means hand cluster is the central one even when darker") {
  const BinaryMask truth = ellipse_mask(120, 90, 60, 45, 30, 22);
  const ImageRgb img = paint(truth, {40, 40, 40}, {220, 220, 220});
  CHECK(mask_iou(kmeans_segment(img, 5), truth) == 1.0);
}

TEST_CASE("k-means on a uniform image is degenerate") {
  ImageRgb gray(20, 20);
  std::fill(gray.pixels.begin(), gray.pixels.end(), 128.0f);
  CHECK(code_of([&] { kmeans_segment(gray, 0); }) == ErrorCode::DegenerateImage);
}

TEST_CASE("two-colour k-means reaches the exact fixed point") {
  BinaryMask stripes(16, 16);
  for (std::size_t y = 4; y < 12; ++y)
    for (std::size_t x = 4; x < 12; ++x) stripes.set(y, x, true);
  const ImageRgb img = paint(stripes, {10, 200, 90}, {120, 20, 250});
  const KMeansResult r = kmeans_cluster(img, 3);
  const auto& hand = r.centroids[r.hand_cluster];
  const auto& bg = r.centroids[1 - r.hand_cluster];
  CHECK(hand == std::array<double, 3>{10, 200, 90});
  CHECK(bg == std::array<double, 3>{120, 20, 250});
  CHECK(r.mask == stripes);
  for (std::size_t i = 0; i < r.labels.size(); ++i) CHECK((r.labels[i] == r.hand_cluster) == (stripes.bits[i] != 0));
}

TEST_CASE("contrast stretch") {
  SUBCASE("full range is unchanged") {
    ImageRgb img(256, 1);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t x = 0; x < 256; ++x) img.at(c, 0, x) = static_cast<float>(x);
    CHECK(enhance_contrast(img, 0, 100) == img);
  }
  SUBCASE("constant channel is unchanged") {
    ImageRgb img(10, 10);
    std::fill(img.pixels.begin(), img.pixels.end(), 77.0f);
    CHECK(enhance_contrast(img) == img);
  }
  SUBCASE("linear map of [50, 100]") {
    ImageRgb img(51, 1);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t x = 0; x <= 50; ++x) img.at(c, 0, x) = 50.0f + static_cast<float>(x);
    const ImageRgb out = enhance_contrast(img, 0, 100);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(out.at(1, 0, 25) == doctest::Approx(127.5));
    CHECK(out.at(2, 0, 50) == doctest::Approx(255.0));
  }
  SUBCASE("monotone per channel") {
    ImageRgb img(40, 30);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> u(20.0f, 230.0f);
    for (float& v : img.pixels) v = u(rng);
    const ImageRgb out = enhance_contrast(img);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t p = img.plane();
      std::vector<std::size_t> order(p);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return img.pixels[c * p + a] < img.pixels[c * p + b]; });
      for (std::size_t i = 1; i < p; ++i) CHECK(out.pixels[c * p + order[i - 1]] <= out.pixels[c * p + order[i]]);
    }
  }
}

TEST_CASE("principal angle") {
  BinaryMask rect(60, 30);
  for (std::size_t y = 10; y < 20; ++y)
    for (std::size_t x = 10; x < 50; ++x) rect.set(y, x, true);
  CHECK(std::abs(principal_angle(rect)) < 1e-6);

  CHECK(std::abs(principal_angle(rasterize_rectangle(200, 200, 100, 100, 120, 30, 30 * kDeg)) - 30 * kDeg) <= 0.5 * kDeg);

  for (int deg = -80; deg <= 80; deg += 10) {
    const double got = principal_angle(rasterize_rectangle(220, 220, 110, 110, 140, 30, deg * kDeg));
    CHECK(std::abs(got - deg * kDeg) <= 1.0 * kDeg);
  }

  CHECK(principal_angle(ellipse_mask(41, 41, 20, 20, 10, 10)) == 0.0);
  CHECK(code_of([] { principal_angle(BinaryMask(5, 5)); }) == ErrorCode::EmptyMask);
}

TEST_CASE("rotation flattens elongated masks") {
  for (int deg = -75; deg <= 75; deg += 15) {
    const BinaryMask m = rasterize_rectangle(200, 160, 100, 80, 110, 28, deg * kDeg);
    const BinaryMask r = rotate(m, principal_angle(m));
    CHECK(std::abs(principal_angle(r)) <= 2.0 * kDeg);
  }
}

TEST_CASE("rotate") {
  SUBCASE("angle 0 is the identity") {
    ImageRgb img(7, 5);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i);
    CHECK(rotate(img, 0.0) == img);
    BinaryMask m(7, 5);
    m.set(1, 2, true);
    CHECK(rotate(m, 0.0) == m);
  }
  SUBCASE("exact quarter turn") {
    // 2 rows x 3 columns; a quarter turn gives 3 rows x 2 columns with out(r, c) = in(c, 2 - r)
    ImageRgb img(3, 2);
    const float in[2][3] = {{1, 2, 3}, {4, 5, 6}};
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) img.at(c, y, x) = in[y][x] + 10.0f * static_cast<float>(c);
    const ImageRgb out = rotate(img, std::numbers::pi / 2);
    REQUIRE(out.width == 2);
    REQUIRE(out.height == 3);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t col = 0; col < 2; ++col) CHECK(out.at(c, r, col) == in[col][2 - r] + 10.0f * static_cast<float>(c));

    BinaryMask m(3, 2);
    m.set(0, 0, true);
    m.set(1, 1, true);
    const BinaryMask mr = rotate(m, std::numbers::pi / 2);
    REQUIRE(mr.width == 2);
    CHECK(mr.at(2, 0));
    CHECK(mr.at(1, 1));
    CHECK(mr.count() == 2);
  }
  SUBCASE("round trip keeps the interior") {
    ImageRgb img(80, 60);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 60; ++y)
        for (std::size_t x = 0; x < 80; ++x)
          img.at(c, y, x) = static_cast<float>(128 + 60 * std::sin(0.21 * x + 0.5 * c) * std::cos(0.17 * y));
    for (double deg : {13.0, -27.0, 41.0}) {
      const ImageRgb back = rotate(rotate(img, deg * kDeg), -deg * kDeg);
      const double ox = (static_cast<double>(back.width) - 80.0) / 2.0;
      const double oy = (static_cast<double>(back.height) - 60.0) / 2.0;
      double err = 0.0;
      std::size_t n = 0;
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 5; y < 55; ++y)
          for (std::size_t x = 5; x < 75; ++x) {
            err += std::abs(sample_bilinear(back, c, x + ox, y + oy) - img.at(c, y, x));
            ++n;
          }
      CHECK(err / static_cast<double>(n) <= 3.0);
    }
  }
}

TEST_CASE("clean_mask") {
  SUBCASE("interior hole is filled") {
    BinaryMask m = ellipse_mask(60, 60, 30, 30, 20, 20);
    m.set(30, 30, false);
    const BinaryMask c = clean_mask(m, 2);
    CHECK(c.at(30, 30));
  }
  SUBCASE("small distant blob is removed") {
    BinaryMask m = ellipse_mask(100, 60, 30, 30, 20, 20);
    const BinaryMask small = ellipse_mask(100, 60, 85, 30, 5, 5);
    for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] |= small.bits[i];
    const BinaryMask c = clean_mask(m, 2);
    CHECK_FALSE(c.at(30, 85));
    CHECK(c.at(30, 30));
  }
  SUBCASE("salt speckles are removed and the blob area is kept") {
    const BinaryMask blob = ellipse_mask(100, 100, 50, 50, 30, 24);
    BinaryMask m = blob;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> pos(0, m.bits.size() - 1);
    for (int i = 0; i < 150; ++i) m.bits[pos(rng)] = 1;
    const BinaryMask c = clean_mask(m, 2);
    for (std::size_t y = 0; y < 100; ++y)
      for (std::size_t x = 0; x < 100; ++x)
        if (c.at(y, x) && !blob.at(y, x)) {
          // anything added must touch the blob boundary
          bool near = false;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) near |= blob.at(y + dy, x + dx);
          CHECK(near);
        }
    const double ratio = static_cast<double>(c.count()) / static_cast<double>(blob.count());
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
  SUBCASE("empty input") { CHECK(code_of([] { clean_mask(BinaryMask(10, 10), 2); }) == ErrorCode::EmptyMask); }
}

TEST_CASE("morphology") {
  BinaryMask dot(21, 21);
  dot.set(10, 10, true);
  const BinaryMask d = dilate(dot, 3);
  CHECK(d == ellipse_mask(21, 21, 10, 10, 3, 3));
  CHECK(erode(d, 3) == dot);

  BinaryMask full(8, 8);
  std::fill(full.bits.begin(), full.bits.end(), 1);
  CHECK(erode(full, 3) == full);

  BinaryMask ring = ellipse_mask(30, 30, 15, 15, 10, 10);
  const BinaryMask inner = ellipse_mask(30, 30, 15, 15, 4, 4);
  for (std::size_t i = 0; i < ring.bits.size(); ++i) ring.bits[i] &= !inner.bits[i];
  CHECK(fill_holes(ring) == ellipse_mask(30, 30, 15, 15, 10, 10));

  BinaryMask two(20, 10);
  two.set(1, 1, true);
  two.set(5, 10, true);
  two.set(5, 11, true);
  two.set(6, 12, true);
  const BinaryMask big = largest_component(two);
  CHECK(big.count() == 3);
  CHECK_FALSE(big.at(1, 1));
}

TEST_CASE("largest inscribed square") {
  BinaryMask full(10, 10);
  std::fill(full.bits.begin(), full.bits.end(), 1);
  CHECK(largest_inscribed_square(full) == RoiSquare{0, 0, 10});

  BinaryMask one(12, 12);
  one.set(3, 7, true);
  CHECK(largest_inscribed_square(one) == RoiSquare{7, 3, 1});

  CHECK(code_of([] { largest_inscribed_square(BinaryMask(4, 4)); }) == ErrorCode::EmptyMask);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    BinaryMask m(24, 24);
    const double density = 0.55 + 0.4 * u(rng);
    for (auto& b : m.bits) b = u(rng) < density;
    if (m.count() == 0) m.set(0, 0, true);
    REQUIRE(largest_inscribed_square(m) == oracle::brute_force_square(m));
  }
}

TEST_CASE("palm ROI pipeline on synthetic hands") {
  PreprocessConfig config;
  config.seed = 7;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    CAPTURE(seed);
    const SyntheticHand hand = synthesize_hand_image(seed);
    const PalmRoi r = extract_palm_roi_detailed(hand.image, 224, config);
    CHECK(r.roi.width == 224);
    CHECK(r.roi.height == 224);
    CHECK(std::abs(r.angle - hand.angle) <= 5 * kDeg);

    const RoiSquare& s = r.square_reduced;
    CHECK(oracle::square_is_true(r.normalized_mask, s.x, s.y, s.side));

    const BinaryMask truth = rotate(hand.mask, r.angle);
    REQUIRE(truth.width == r.rotated_width);
    REQUIRE(truth.height == r.rotated_height);
    const RoiSquare& f = r.square_full;
    CHECK(f.side >= config.min_roi_side);
    CHECK(oracle::square_is_true(truth, f.x, f.y, f.side));

    const BinaryMask seg_truth = resize_nearest(hand.mask, r.segmentation.width, r.segmentation.height);
    CHECK(mask_iou(r.segmentation, seg_truth) >= 0.9);
  }
}

TEST_CASE("palm ROI pipeline is deterministic and sized per model") {
  const SyntheticHand hand = synthesize_hand_image(3);
  PreprocessConfig config;
  config.seed = 11;
  const ImageRgb a = extract_palm_roi(hand.image, build_model(ModelKind::Vgg16), config);
  const ImageRgb b = extract_palm_roi(hand.image, build_model(ModelKind::Vgg16), config);
  CHECK(a == b);
  const ImageRgb alex = extract_palm_roi(hand.image, build_model(ModelKind::AlexNet), config);
  CHECK(alex.width == 227);
  CHECK(alex.height == 227);
}

TEST_CASE("pipeline failures name the step") {
  ImageRgb gray(120, 90);
  std::fill(gray.pixels.begin(), gray.pixels.end(), 90.0f);
  try {
    extract_palm_roi_detailed(gray, 224, {});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateImage);
    CHECK(std::string(e.what()).find("segment") != std::string::npos);
  }

  PreprocessConfig strict;
  strict.min_roi_side = 10000;
  CHECK(code_of([&] { extract_palm_roi_detailed(synthesize_hand_image(1).image, 224, strict); }) ==
        ErrorCode::RoiTooSmall);
}
