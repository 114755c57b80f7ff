#include "palmline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "palmline/error.hpp"
#include "palmline/rng.hpp"

namespace palmline {

FeatureTable synthesize_features(std::size_t classes, std::size_t per_class, std::size_t dim, double sigma,
                                 std::uint64_t seed) {
  if (classes < 2 || per_class < 2 || dim == 0)
    fail(ErrorCode::InvalidArgument, "synthesize_features needs classes >= 2, per_class >= 2, dim >= 1");
  FeatureTable table;
  table.model_kind = "synthetic";
  table.layer = "blobs";
  table.dim = dim;
  Rng rng(derive_seed(seed, {0x626c6f6273ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  char name[32];
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> center(dim);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : center) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : center) v /= norm;
    std::snprintf(name, sizeof name, "s%03zu", c);
    const std::string subject = name;
    for (std::size_t i = 0; i < per_class; ++i) {
      std::snprintf(name, sizeof name, "_%02zu", i);
      FeatureRow row{subject, subject + name, std::vector<float>(dim)};
      for (std::size_t k = 0; k < dim; ++k) row.feature[k] = static_cast<float>(center[k] + sigma * normal(rng));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

namespace {

struct Ellipse {
  double u, v;    // centre in hand coordinates
  double ru, rv;  // semi-axes along u and v
  bool contains(double pu, double pv) const {
    const double a = (pu - u) / ru, b = (pv - v) / rv;
    return a * a + b * b <= 1.0;
  }
};

}  // namespace

SyntheticHand synthesize_hand_image(std::uint64_t seed, const HandSynthOptions& options) {
  if (options.width < 32 || options.height < 32) fail(ErrorCode::InvalidArgument, "synthetic hand needs >= 32x32");
  Rng rng(derive_seed(seed, {0x68616e64ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = static_cast<double>(options.width), h = static_cast<double>(options.height);

  SyntheticHand out;
  out.angle = std::isnan(options.angle) ? (unit(rng) * 70.0 - 35.0) * std::numbers::pi / 180.0 : options.angle;
  const double scale = std::min(w / 320.0, h / 240.0) * (0.9 + 0.2 * unit(rng));
  const double cx = w / 2.0 + (unit(rng) - 0.5) * 0.06 * w;
  const double cy = h / 2.0 + (unit(rng) - 0.5) * 0.06 * h;
  // The palm centre sits behind the image centre so the fingers stay in frame.
  const double palm_a = 80.0 * scale, palm_b = 0.72 * palm_a;
  const double shift = -0.35 * palm_a;
  std::vector<Ellipse> parts{{shift, 0.0, palm_a, palm_b}};
  const double finger_len = 0.85 * palm_a, finger_half = 0.16 * palm_b;
  for (double offset : {-0.66, -0.22, 0.22, 0.66}) {
    const double len = finger_len * (offset == -0.66 || offset == 0.66 ? 0.8 : 1.0);
    parts.push_back({shift + palm_a * 0.8 + len / 2.0, offset * palm_b, len / 2.0 + 0.1 * palm_a, finger_half});
  }

  const double ca = std::cos(out.angle), sa = std::sin(out.angle);
  const double phase_x = unit(rng) * 6.28, phase_y = unit(rng) * 6.28;
  const double skin[3] = {205.0, 165.0, 140.0};
  const double back[3] = {48.0, 44.0, 42.0};
  std::normal_distribution<double> noise(0.0, 5.0);

  out.image = ImageRgb(options.width, options.height);
  out.mask = BinaryMask(options.width, options.height);
  for (std::size_t y = 0; y < options.height; ++y) {
    for (std::size_t x = 0; x < options.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double u = dx * ca + dy * sa, v = -dx * sa + dy * ca;
      const bool hand = std::any_of(parts.begin(), parts.end(), [&](const Ellipse& e) { return e.contains(u, v); });
      out.mask.set(y, x, hand);
      const double light = 0.78 + 0.3 * static_cast<double>(x) / w;
      const double texture = hand ? 0.0 : 10.0 * std::sin(static_cast<double>(x) / 7.0 + phase_x) *
                                               std::cos(static_cast<double>(y) / 11.0 + phase_y);
      for (std::size_t c = 0; c < 3; ++c) {
        const double base = hand ? skin[c] : back[c] + texture;
        out.image.at(c, y, x) = static_cast<float>(std::clamp(base * light + noise(rng), 0.0, 255.0));
      }
    }
  }
  return out;
}

BinaryMask rasterize_rectangle(std::size_t width, std::size_t height, double cx, double cy, double length,
                               double thickness, double angle) {
  BinaryMask m(width, height);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double u = dx * ca + dy * sa, v = -dx * sa + dy * ca;
      m.set(y, x, std::abs(u) <= length / 2.0 && std::abs(v) <= thickness / 2.0);
    }
  }
  return m;
}

}  // namespace palmline
