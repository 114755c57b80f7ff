#include "palmline/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "palmline/error.hpp"

namespace palmline {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Upper bound on the patch matrix size (floats) built per tile.
constexpr std::size_t kPatchBudget = std::size_t{1} << 22;

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  fail(ErrorCode::ShapeMismatch, op + ": " + detail);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad, std::size_t groups) {
  if (input.rank() != 3) shape_error("conv2d", "input must be [C,H,W], got " + shape_to_string(input.dims()));
  if (weight.rank() != 4) shape_error("conv2d", "weight must be rank 4, got " + shape_to_string(weight.dims()));
  if (stride == 0 || groups == 0) shape_error("conv2d", "stride and groups must be >= 1");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t out_channels = weight.dim(0), group_in = weight.dim(1);
  const std::size_t kh = weight.dim(2), kw = weight.dim(3);
  if (channels % groups != 0 || out_channels % groups != 0)
    shape_error("conv2d", "groups " + std::to_string(groups) + " must divide in " + std::to_string(channels) +
                              " and out " + std::to_string(out_channels) + " channels");
  if (group_in != channels / groups)
    shape_error("conv2d", "weight " + shape_to_string(weight.dims()) + " expects " + std::to_string(group_in) +
                              " input channels per group, input " + shape_to_string(input.dims()) + " has " +
                              std::to_string(channels / groups));
  if (bias.rank() != 1 || bias.dim(0) != out_channels)
    shape_error("conv2d", "bias " + shape_to_string(bias.dims()) + " for " + std::to_string(out_channels) +
                              " output channels");
  if (height + 2 * pad < kh || width + 2 * pad < kw)
    shape_error("conv2d", "kernel " + std::to_string(kh) + "x" + std::to_string(kw) + " larger than padded input " +
                              shape_to_string(input.dims()));

  const std::size_t out_h = (height + 2 * pad - kh) / stride + 1;
  const std::size_t out_w = (width + 2 * pad - kw) / stride + 1;
  const std::size_t group_out = out_channels / groups;
  const std::size_t patch = group_in * kh * kw;
  const std::size_t out_plane = out_h * out_w;

  Tensor out({out_channels, out_h, out_w});
  const std::size_t tile_rows = std::clamp<std::size_t>(kPatchBudget / (patch * out_w), 1, out_h);
  std::vector<float> cols(patch * tile_rows * out_w);
  const float* in = input.data();
  const auto ipad = static_cast<std::ptrdiff_t>(pad);

  for (std::size_t g = 0; g < groups; ++g) {
    Eigen::Map<const RowMatrix> kernels(weight.data() + g * group_out * patch, static_cast<Eigen::Index>(group_out),
                                        static_cast<Eigen::Index>(patch));
    for (std::size_t row0 = 0; row0 < out_h; row0 += tile_rows) {
      const std::size_t rows = std::min(tile_rows, out_h - row0);
      const std::size_t span = rows * out_w;
      for (std::size_t c = 0; c < group_in; ++c) {
        const float* plane = in + (g * group_in + c) * height * width;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            float* dst = cols.data() + ((c * kh + ky) * kw + kx) * span;
            for (std::size_t oy = 0; oy < rows; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>((row0 + oy) * stride + ky) - ipad;
              float* d = dst + oy * out_w;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
                std::fill(d, d + out_w, 0.0f);
                continue;
              }
              const float* src = plane + static_cast<std::size_t>(iy) * width;
              for (std::size_t ox = 0; ox < out_w; ++ox) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - ipad;
                d[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) ? 0.0f : src[ix];
              }
            }
          }
        }
      }
      Eigen::Map<const RowMatrix> patches(cols.data(), static_cast<Eigen::Index>(patch),
                                          static_cast<Eigen::Index>(span));
      Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>> result(
          out.data() + g * group_out * out_plane + row0 * out_w, static_cast<Eigen::Index>(group_out),
          static_cast<Eigen::Index>(span), Eigen::OuterStride<>(static_cast<Eigen::Index>(out_plane)));
      result.noalias() = kernels * patches;
    }
  }
  for (std::size_t o = 0; o < out_channels; ++o) {
    float* p = out.data() + o * out_plane;
    const float b = bias[o];
    for (std::size_t i = 0; i < out_plane; ++i) p[i] += b;
  }
  return out;
}

Tensor relu(Tensor input) {
  for (float& v : input.values()) v = std::max(v, 0.0f);
  return input;
}

Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride) {
  if (input.rank() != 3) shape_error("maxpool2d", "input must be [C,H,W], got " + shape_to_string(input.dims()));
  if (kernel == 0 || stride == 0) shape_error("maxpool2d", "kernel and stride must be >= 1");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  if (kernel > height || kernel > width)
    shape_error("maxpool2d", "kernel " + std::to_string(kernel) + " larger than input " +
                                 shape_to_string(input.dims()));
  const std::size_t out_h = (height - kernel) / stride + 1;
  const std::size_t out_w = (width - kernel) / stride + 1;
  Tensor out({channels, out_h, out_w});
  float* o = out.data();
  for (std::size_t c = 0; c < channels; ++c) {
    const float* plane = input.data() + c * height * width;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const float* base = plane + oy * stride * width + ox * stride;
        float m = base[0];
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx) m = std::max(m, base[ky * width + kx]);
        *o++ = m;
      }
    }
  }
  return out;
}

Tensor local_response_norm(const Tensor& input, std::size_t n, float alpha, float beta, float k) {
  if (input.rank() != 3)
    shape_error("local_response_norm", "input must be [C,H,W], got " + shape_to_string(input.dims()));
  if (n == 0 || n % 2 == 0) fail(ErrorCode::InvalidArgument, "local_response_norm: window size must be odd");
  const std::size_t channels = input.dim(0);
  const std::size_t plane = input.dim(1) * input.dim(2);
  const std::size_t half = n / 2;
  const float scale = alpha / static_cast<float>(n);
  Tensor out(input.dims());
  std::vector<float> squares(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) squares[i] = input[i] * input[i];
  std::vector<float> window(plane);
  for (std::size_t c = 0; c < channels; ++c) {
    std::fill(window.begin(), window.end(), 0.0f);
    const std::size_t lo = c >= half ? c - half : 0;
    const std::size_t hi = std::min(channels - 1, c + half);
    for (std::size_t cc = lo; cc <= hi; ++cc) {
      const float* sq = squares.data() + cc * plane;
      for (std::size_t i = 0; i < plane; ++i) window[i] += sq[i];
    }
    const float* a = input.data() + c * plane;
    float* b = out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) b[i] = a[i] / std::pow(k + scale * window[i], beta);
  }
  return out;
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 1) shape_error("dense", "input must be rank 1, got " + shape_to_string(input.dims()));
  if (weight.rank() != 2 || weight.dim(1) != input.dim(0))
    shape_error("dense", "weight " + shape_to_string(weight.dims()) + " incompatible with input " +
                             shape_to_string(input.dims()));
  const std::size_t out_features = weight.dim(0);
  if (bias.rank() != 1 || bias.dim(0) != out_features)
    shape_error("dense", "bias " + shape_to_string(bias.dims()) + " for " + std::to_string(out_features) +
                             " outputs");
  Tensor out({out_features});
  Eigen::Map<const RowMatrix> w(weight.data(), static_cast<Eigen::Index>(out_features),
                                static_cast<Eigen::Index>(input.dim(0)));
  Eigen::Map<const Eigen::VectorXf> x(input.data(), static_cast<Eigen::Index>(input.dim(0)));
  Eigen::Map<const Eigen::VectorXf> b(bias.data(), static_cast<Eigen::Index>(out_features));
  Eigen::Map<Eigen::VectorXf> y(out.data(), static_cast<Eigen::Index>(out_features));
  y.noalias() = w * x;
  y += b;
  return out;
}

}  // namespace palmline
