#include "palmline/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include "palmline/error.hpp"
#include "palmline/rng.hpp"

namespace palmline {

void PreprocessConfig::validate() const {
  if (!(downscale_factor > 0.0 && downscale_factor <= 1.0))
    fail(ErrorCode::InvalidArgument, "downscale_factor must be in (0, 1]");
  if (!(percentile_low >= 0.0 && percentile_low < percentile_high && percentile_high <= 100.0))
    fail(ErrorCode::InvalidArgument, "percentiles must satisfy 0 <= low < high <= 100");
  if (kmeans_max_iter == 0) fail(ErrorCode::InvalidArgument, "kmeans_max_iter must be >= 1");
}

ImageRgb downscale(const ImageRgb& image, double factor) {
  if (image.empty()) fail(ErrorCode::EmptyImage, "downscale of an empty image");
  if (!(factor > 0.0 && factor <= 1.0)) fail(ErrorCode::InvalidArgument, "downscale factor must be in (0, 1]");
  auto scaled = [factor](std::size_t d) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(d) * factor)));
  };
  return resize_bilinear(image, scaled(image.width), scaled(image.height));
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double sq_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

std::array<double, 3> pixel(const ImageRgb& im, std::size_t i) {
  const std::size_t p = im.plane();
  return {im.pixels[i], im.pixels[p + i], im.pixels[2 * p + i]};
}

// Component labels (1-based) under 8-connectivity and the size of each.
struct Components {
  std::vector<std::uint32_t> label;
  std::vector<std::size_t> sizes;  // index 0 unused
};

Components label_components(const BinaryMask& mask, bool eight) {
  const std::size_t w = mask.width, h = mask.height;
  Components out{std::vector<std::uint32_t>(w * h, 0), {0}};
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (!mask.bits[start] || out.label[start]) continue;
    const auto id = static_cast<std::uint32_t>(out.sizes.size());
    std::size_t size = 0;
    stack.push_back(start);
    out.label[start] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const auto y = static_cast<std::ptrdiff_t>(cur / w), x = static_cast<std::ptrdiff_t>(cur % w);
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
          const std::ptrdiff_t ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) || nx >= static_cast<std::ptrdiff_t>(w))
            continue;
          const std::size_t n = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (mask.bits[n] && !out.label[n]) {
            out.label[n] = id;
            stack.push_back(n);
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

}  // namespace

KMeansResult kmeans_cluster(const ImageRgb& image, std::uint64_t seed, std::size_t max_iter) {
  if (image.empty()) fail(ErrorCode::EmptyImage, "kmeans_segment: empty image");
  const std::size_t n = image.plane();
  const auto first_px = pixel(image, 0);
  bool distinct = false;
  for (std::size_t i = 1; i < n && !distinct; ++i) distinct = pixel(image, i) != first_px;
  if (!distinct) fail(ErrorCode::DegenerateImage, "kmeans_segment: image has a single colour");

  Rng rng(derive_seed(seed, {0x6b6d65616e73ULL}));
  KMeansResult res;
  // k-means++ seeding: uniform first centre, second drawn proportional to D^2.
  res.centroids[0] = pixel(image, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> d2(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += d2[i] = sq_dist(pixel(image, i), res.centroids[0]);
  double target = std::uniform_real_distribution<double>(0.0, total)(rng);
  std::size_t pick = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (d2[i] > 0.0 && target < d2[i]) {
      pick = i;
      break;
    }
    target -= d2[i];
  }
  if (d2[pick] == 0.0)
    for (std::size_t i = n; i-- > 0;)
      if (d2[i] > 0.0) {
        pick = i;
        break;
      }
  res.centroids[1] = pixel(image, pick);

  res.labels.assign(n, 0);
  bool changed = true;
  for (res.iterations = 0; res.iterations < max_iter && changed; ++res.iterations) {
    changed = false;
    std::array<std::array<double, 3>, 2> sum{};
    std::array<std::size_t, 2> count{};
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = pixel(image, i);
      const std::uint8_t l = sq_dist(p, res.centroids[1]) < sq_dist(p, res.centroids[0]) ? 1 : 0;
      if (l != res.labels[i]) changed = true;
      res.labels[i] = l;
      for (int c = 0; c < 3; ++c) sum[l][c] += p[c];
      ++count[l];
    }
    for (std::size_t k = 0; k < 2; ++k)
      if (count[k] > 0)
        for (int c = 0; c < 3; ++c) res.centroids[k][c] = sum[k][c] / static_cast<double>(count[k]);
  }

  // Hand cluster: largest component overlapping the central window the most.
  const std::size_t w = image.width, h = image.height;
  const std::size_t x0 = w / 4, x1 = std::max(x0 + 1, (3 * w) / 4);
  const std::size_t y0 = h / 4, y1 = std::max(y0 + 1, (3 * h) / 4);
  std::array<std::size_t, 2> overlap{};
  for (std::size_t k = 0; k < 2; ++k) {
    BinaryMask m(w, h);
    for (std::size_t i = 0; i < n; ++i) m.bits[i] = res.labels[i] == k;
    const BinaryMask big = largest_component(m);
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) overlap[k] += big.at(y, x);
  }
  if (overlap[0] != overlap[1]) {
    res.hand_cluster = overlap[1] > overlap[0] ? 1 : 0;
  } else {
    const auto brightness = [](const std::array<double, 3>& c) { return c[0] + c[1] + c[2]; };
    res.hand_cluster = brightness(res.centroids[1]) > brightness(res.centroids[0]) ? 1 : 0;
  }
  res.mask = BinaryMask(w, h);
  for (std::size_t i = 0; i < n; ++i) res.mask.bits[i] = res.labels[i] == res.hand_cluster;
  return res;
}

BinaryMask kmeans_segment(const ImageRgb& image, std::uint64_t seed, std::size_t max_iter) {
  return kmeans_cluster(image, seed, max_iter).mask;
}

// ---------------------------------------------------------------------------
// contrast

namespace {

// Linear interpolation between order statistics; p in [0, 100].
double percentile(std::vector<float>& values, double p) {
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double vlo = values[lo];
  if (hi == lo) return vlo;
  const double vhi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return vlo + (pos - static_cast<double>(lo)) * (vhi - vlo);
}

}  // namespace

ImageRgb enhance_contrast(const ImageRgb& image, double percentile_low, double percentile_high) {
  if (!(percentile_low >= 0.0 && percentile_low < percentile_high && percentile_high <= 100.0))
    fail(ErrorCode::InvalidArgument, "enhance_contrast: percentiles must satisfy 0 <= low < high <= 100");
  if (image.empty()) return image;
  ImageRgb out = image;
  const std::size_t plane = image.plane();
  std::vector<float> scratch(plane);
  for (std::size_t c = 0; c < 3; ++c) {
    const float* src = image.pixels.data() + c * plane;
    std::copy(src, src + plane, scratch.begin());
    const double lo = percentile(scratch, percentile_low);
    const double hi = percentile(scratch, percentile_high);
    if (!(hi - lo > 1e-6)) continue;
    const double gain = 255.0 / (hi - lo);
    float* dst = out.pixels.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>(std::clamp((static_cast<double>(src[i]) - lo) * gain, 0.0, 255.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// orientation

double principal_angle(const BinaryMask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
        ++n;
      }
  if (n == 0) fail(ErrorCode::EmptyMask, "principal_angle: mask has no foreground");
  const double cx = sx / static_cast<double>(n), cy = sy / static_cast<double>(n);
  double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
      }
  // Isotropic up to rounding: no preferred axis.
  if (std::abs(2.0 * mu11) + std::abs(mu20 - mu02) <= 1e-9 * (mu20 + mu02)) return 0.0;
  double theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
  return theta;
}

namespace {

struct RotationFrame {
  double cos_a, sin_a;
  std::size_t out_w, out_h;
  double cx, cy, ocx, ocy;

  // Source coordinates of destination pixel (x, y).
  std::pair<double, double> source(std::size_t x, std::size_t y) const {
    const double dx = static_cast<double>(x) - ocx, dy = static_cast<double>(y) - ocy;
    return {cos_a * dx - sin_a * dy + cx, sin_a * dx + cos_a * dy + cy};
  }
};

double snap(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  if (std::abs(std::abs(v) - 1.0) < 1e-12) return v > 0 ? 1.0 : -1.0;
  return v;
}

RotationFrame rotation_frame(std::size_t w, std::size_t h, double angle) {
  RotationFrame f{};
  f.cos_a = snap(std::cos(angle));
  f.sin_a = snap(std::sin(angle));
  const double fw = static_cast<double>(w), fh = static_cast<double>(h);
  f.out_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(fw * f.cos_a) + std::abs(fh * f.sin_a) - 1e-9)));
  f.out_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(fw * f.sin_a) + std::abs(fh * f.cos_a) - 1e-9)));
  f.cx = (fw - 1.0) / 2.0;
  f.cy = (fh - 1.0) / 2.0;
  f.ocx = (static_cast<double>(f.out_w) - 1.0) / 2.0;
  f.ocy = (static_cast<double>(f.out_h) - 1.0) / 2.0;
  return f;
}

}  // namespace

ImageRgb rotate(const ImageRgb& image, double angle) {
  if (image.empty()) return image;
  const RotationFrame f = rotation_frame(image.width, image.height, angle);
  ImageRgb out(f.out_w, f.out_h);
  const double max_x = static_cast<double>(image.width) - 0.5, max_y = static_cast<double>(image.height) - 0.5;
  for (std::size_t y = 0; y < f.out_h; ++y) {
    for (std::size_t x = 0; x < f.out_w; ++x) {
      auto [sx, sy] = f.source(x, y);
      if (sx < -0.5 || sy < -0.5 || sx > max_x || sy > max_y) continue;
      sx = std::clamp(sx, 0.0, static_cast<double>(image.width - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(image.height - 1));
      const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1), y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = image.at(c, y0, x0) * (1.0 - fx) + image.at(c, y0, x1) * fx;
        const double bot = image.at(c, y1, x0) * (1.0 - fx) + image.at(c, y1, x1) * fx;
        out.at(c, y, x) = static_cast<float>(top * (1.0 - fy) + bot * fy);
      }
    }
  }
  return out;
}

BinaryMask rotate(const BinaryMask& mask, double angle) {
  if (mask.empty()) return mask;
  const RotationFrame f = rotation_frame(mask.width, mask.height, angle);
  BinaryMask out(f.out_w, f.out_h);
  for (std::size_t y = 0; y < f.out_h; ++y) {
    for (std::size_t x = 0; x < f.out_w; ++x) {
      const auto [sx, sy] = f.source(x, y);
      const double rx = std::floor(sx + 0.5), ry = std::floor(sy + 0.5);
      if (rx < 0 || ry < 0 || rx >= static_cast<double>(mask.width) || ry >= static_cast<double>(mask.height))
        continue;
      out.set(y, x, mask.at(static_cast<std::size_t>(ry), static_cast<std::size_t>(rx)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// mask cleanup

BinaryMask largest_component(const BinaryMask& mask) {
  const Components comps = label_components(mask, true);
  BinaryMask out(mask.width, mask.height);
  if (comps.sizes.size() <= 1) return out;
  std::uint32_t best = 1;
  for (std::uint32_t id = 2; id < comps.sizes.size(); ++id)
    if (comps.sizes[id] > comps.sizes[best]) best = id;
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = comps.label[i] == best;
  return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  BinaryMask background(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) background.bits[i] = !mask.bits[i];
  const Components comps = label_components(background, false);
  std::vector<bool> touches(comps.sizes.size(), false);
  const std::size_t w = mask.width, h = mask.height;
  for (std::size_t x = 0; x < w; ++x) {
    touches[comps.label[x]] = true;
    touches[comps.label[(h - 1) * w + x]] = true;
  }
  for (std::size_t y = 0; y < h; ++y) {
    touches[comps.label[y * w]] = true;
    touches[comps.label[y * w + w - 1]] = true;
  }
  BinaryMask out = mask;
  for (std::size_t i = 0; i < out.bits.size(); ++i)
    if (comps.label[i] && !touches[comps.label[i]]) out.bits[i] = 1;
  return out;
}

namespace {

// Each disk row dy covers columns [x - half_width[dy], x + half_width[dy]].
// Per-row prefix counts make every span test O(1).
BinaryMask morph(const BinaryMask& mask, std::size_t radius, bool erosion) {
  if (radius == 0 || mask.empty()) return mask;
  const std::size_t w = mask.width, h = mask.height;
  const auto r = static_cast<std::ptrdiff_t>(radius);
  std::vector<std::ptrdiff_t> half(2 * radius + 1);
  for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
    half[static_cast<std::size_t>(dy + r)] =
        static_cast<std::ptrdiff_t>(std::floor(std::sqrt(static_cast<double>(r * r - dy * dy))));
  std::vector<std::uint32_t> prefix((w + 1) * h, 0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      prefix[y * (w + 1) + x + 1] = prefix[y * (w + 1) + x] + (mask.bits[y * w + x] ? 1u : 0u);
  BinaryMask out(w, h);
  const auto iw = static_cast<std::ptrdiff_t>(w), ih = static_cast<std::ptrdiff_t>(h);
  for (std::ptrdiff_t y = 0; y < ih; ++y) {
    for (std::ptrdiff_t x = 0; x < iw; ++x) {
      bool result = erosion;
      for (std::ptrdiff_t dy = -r; dy <= r && result == erosion; ++dy) {
        const std::ptrdiff_t yy = y + dy;
        if (yy < 0 || yy >= ih) continue;
        const std::ptrdiff_t hw = half[static_cast<std::size_t>(dy + r)];
        const std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, x - hw), b = std::min(iw - 1, x + hw);
        const std::uint32_t* row = prefix.data() + static_cast<std::size_t>(yy) * (w + 1);
        const std::uint32_t ones = row[b + 1] - row[a];
        if (erosion) {
          if (ones != static_cast<std::uint32_t>(b - a + 1)) result = false;
        } else if (ones > 0) {
          result = true;
        }
      }
      out.bits[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = result;
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, std::size_t radius) { return morph(mask, radius, true); }
BinaryMask dilate(const BinaryMask& mask, std::size_t radius) { return morph(mask, radius, false); }

BinaryMask clean_mask(const BinaryMask& mask, std::size_t radius) {
  BinaryMask m = largest_component(mask);
  if (m.count() == 0) fail(ErrorCode::EmptyMask, "clean_mask: mask has no foreground");
  m = dilate(erode(m, radius), radius);
  m = erode(dilate(m, radius), radius);
  m = largest_component(fill_holes(m));
  if (m.count() == 0) fail(ErrorCode::EmptyMask, "clean_mask: nothing survives opening");
  return m;
}

RoiSquare largest_inscribed_square(const BinaryMask& mask) {
  const std::size_t w = mask.width, h = mask.height;
  std::vector<std::uint32_t> prev(w, 0), cur(w, 0);
  RoiSquare best;
  std::size_t best_row = 0, best_col = 0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      if (!mask.at(i, j)) {
        cur[j] = 0;
        continue;
      }
      cur[j] = (i == 0 || j == 0) ? 1 : 1 + std::min({prev[j], cur[j - 1], prev[j - 1]});
      if (cur[j] > best.side) {
        best.side = cur[j];
        best_row = i;
        best_col = j;
      }
    }
    std::swap(prev, cur);
  }
  if (best.side == 0) fail(ErrorCode::EmptyMask, "largest_inscribed_square: mask has no foreground");
  best.x = best_col + 1 - best.side;
  best.y = best_row + 1 - best.side;
  return best;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

template <class F>
auto step(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(name) != std::string::npos) throw;
    throw Error(e.code(), std::string(name) + ": " + what);
  }
}

}  // namespace

PalmRoi extract_palm_roi_detailed(const ImageRgb& image, std::size_t input_side, const PreprocessConfig& config) {
  config.validate();
  if (image.empty()) fail(ErrorCode::EmptyImage, "extract_palm_roi: empty image");
  PalmRoi out;
  const ImageRgb reduced = step("downscale", [&] { return downscale(image, config.downscale_factor); });
  out.segmentation = step("kmeans_segment", [&] { return kmeans_segment(reduced, config.seed, config.kmeans_max_iter); });
  const ImageRgb enhanced = step("enhance_contrast", [&] {
    return enhance_contrast(image, config.percentile_low, config.percentile_high);
  });
  out.angle = step("principal_angle", [&] { return principal_angle(out.segmentation); });
  const ImageRgb rotated = rotate(enhanced, out.angle);
  out.rotated_width = rotated.width;
  out.rotated_height = rotated.height;
  out.normalized_mask = step("clean_mask", [&] { return clean_mask(rotate(out.segmentation, out.angle), config.morph_radius); });
  out.square_reduced = step("largest_inscribed_square", [&] { return largest_inscribed_square(out.normalized_mask); });

  // Map the square to full resolution about the canvas centres, inset by one
  // reduced pixel's half-width beyond the outermost pixel centres to absorb
  // resampling error at the mask boundary. Full pixels whose centres fall
  // inside are kept.
  const double scale = 0.5 * (static_cast<double>(image.width) / static_cast<double>(reduced.width) +
                              static_cast<double>(image.height) / static_cast<double>(reduced.height));
  const auto to_full = [&](double pos, std::size_t reduced_extent, std::size_t full_extent) {
    return static_cast<double>(full_extent) / 2.0 + (pos - static_cast<double>(reduced_extent) / 2.0) * scale;
  };
  const RoiSquare& sq = out.square_reduced;
  const double first = 1.0, last = static_cast<double>(sq.side) - 1.0;
  const double fx0 = to_full(static_cast<double>(sq.x) + first, out.normalized_mask.width, rotated.width);
  const double fx1 = to_full(static_cast<double>(sq.x) + last, out.normalized_mask.width, rotated.width);
  const double fy0 = to_full(static_cast<double>(sq.y) + first, out.normalized_mask.height, rotated.height);
  const double fy1 = to_full(static_cast<double>(sq.y) + last, out.normalized_mask.height, rotated.height);
  const double x0 = std::max(0.0, std::ceil(fx0 - 0.5 - 1e-9)), y0 = std::max(0.0, std::ceil(fy0 - 0.5 - 1e-9));
  const double x1 = std::min(static_cast<double>(rotated.width), std::floor(fx1 - 0.5 + 1e-9) + 1.0);
  const double y1 = std::min(static_cast<double>(rotated.height), std::floor(fy1 - 0.5 + 1e-9) + 1.0);
  const double side = std::min(x1 - x0, y1 - y0);
  if (side < static_cast<double>(std::max<std::size_t>(config.min_roi_side, 1)))
    fail(ErrorCode::RoiTooSmall, "largest_inscribed_square: ROI side " + std::to_string(side < 0 ? 0 : static_cast<long>(side)) +
                                     " px below minimum " + std::to_string(config.min_roi_side) +
                                     " (segmentation probably failed)");
  out.square_full = {static_cast<std::size_t>(x0), static_cast<std::size_t>(y0), static_cast<std::size_t>(side)};

  ImageRgb crop(out.square_full.side, out.square_full.side);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < crop.height; ++y)
      for (std::size_t x = 0; x < crop.width; ++x)
        crop.at(c, y, x) = rotated.at(c, out.square_full.y + y, out.square_full.x + x);
  out.roi = resize_bilinear(crop, input_side, input_side);
  return out;
}

ImageRgb extract_palm_roi(const ImageRgb& image, const ModelGraph& graph, const PreprocessConfig& config) {
  return extract_palm_roi_detailed(image, graph.input_side, config).roi;
}

}  // namespace palmline
