#pragma once

#include <cstddef>

#include "palmline/tensor.hpp"

namespace palmline {

/// 2-D cross-correlation with zero padding.
///
/// input [C,H,W], weight [O, C/groups, kh, kw], bias [O] -> [O, H', W'] with
/// H' = (H + 2*pad - kh) / stride + 1. Output channel block g only sees input
/// channel block g. Throws ShapeMismatch naming the offending dims.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad, std::size_t groups = 1);

Tensor relu(Tensor input);

/// Unpadded max pooling, floor output size.
Tensor maxpool2d(const Tensor& input, std::size_t kernel, std::size_t stride);

/// Cross-channel LRN, b[c] = a[c] / (k + alpha/n * sum a[c']^2)^beta over the
/// n-wide channel window clipped at the channel bounds.
Tensor local_response_norm(const Tensor& input, std::size_t n, float alpha, float beta, float k);

/// y = W x + b with input [D], weight [O, D], bias [O].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

}  // namespace palmline
