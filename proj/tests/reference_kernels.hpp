#pragma once

// Direct-summation kernels in double precision. These are the test oracles for
// the production kernels and share no code with them.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "palmline/tensor.hpp"

namespace palmline::ref {

inline Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad,
                     std::size_t groups) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t O = w.dim(0), Cg = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  const std::size_t OH = (H + 2 * pad - KH) / stride + 1, OW = (W + 2 * pad - KW) / stride + 1;
  const std::size_t Og = O / groups;
  (void)C;
  Tensor out({O, OH, OW});
  for (std::size_t o = 0; o < O; ++o) {
    const std::size_t g = o / Og;
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double acc = b[o];
        for (std::size_t c = 0; c < Cg; ++c)
          for (std::size_t ky = 0; ky < KH; ++ky)
            for (std::size_t kx = 0; kx < KW; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
              acc += static_cast<double>(w[((o * Cg + c) * KH + ky) * KW + kx]) *
                     in.at(g * Cg + c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
        out[(o * OH + oy) * OW + ox] = static_cast<float>(acc);
      }
  }
  return out;
}

inline Tensor maxpool2d(const Tensor& in, std::size_t k, std::size_t s) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t OH = (H - k) / s + 1, OW = (W - k) / s + 1;
  Tensor out({C, OH, OW});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        float m = -INFINITY;
        for (std::size_t y = oy * s; y < oy * s + k; ++y)
          for (std::size_t x = ox * s; x < ox * s + k; ++x) m = std::max(m, in.at(c, y, x));
        out[(c * OH + oy) * OW + ox] = m;
      }
  return out;
}

inline Tensor lrn(const Tensor& in, std::size_t n, double alpha, double beta, double k) {
  const long C = static_cast<long>(in.dim(0));
  const std::size_t H = in.dim(1), W = in.dim(2);
  Tensor out(in.dims());
  for (long c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        double sum = 0.0;
        for (long cc = c - static_cast<long>(n / 2); cc <= c + static_cast<long>(n / 2); ++cc) {
          if (cc < 0 || cc >= C) continue;
          const double a = in.at(static_cast<std::size_t>(cc), y, x);
          sum += a * a;
        }
        const double a = in.at(static_cast<std::size_t>(c), y, x);
        out[(static_cast<std::size_t>(c) * H + y) * W + x] =
            static_cast<float>(a / std::pow(k + alpha / static_cast<double>(n) * sum, beta));
      }
  return out;
}

inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t O = w.dim(0), D = w.dim(1);
  Tensor out({O});
  for (std::size_t o = 0; o < O; ++o) {
    double acc = b[o];
    for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(w[o * D + d]) * x[d];
    out[o] = static_cast<float>(acc);
  }
  return out;
}

inline Tensor random_tensor(Shape dims, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<float> u(lo, hi);
  for (float& v : t.values()) v = u(rng);
  return t;
}

/// max |a - b| / max(max |b|, 1e-30)
inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, static_cast<double>(std::abs(a[i] - b[i])));
    scale = std::max(scale, static_cast<double>(std::abs(b[i])));
  }
  return diff / std::max(scale, 1e-30);
}

}  // namespace palmline::ref
