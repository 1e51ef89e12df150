#pragma once

#include <vector>

#include "vit/tensor.hpp"

namespace gescd::vit {

/// y = x @ w^T + b. x: [rows, in], w: [out, in], b: [out] or empty.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// In-place layer norm over the last dimension. weight/bias: [channels].
void layernorm_lastdim(Tensor& x, const Tensor& weight, const Tensor& bias, float eps = 1e-6f);

/// Layer norm over the channel dimension of a [C, H, W] tensor.
void layernorm_channels(Tensor& x, const Tensor& weight, const Tensor& bias, float eps = 1e-6f);

/// Exact (erf-based) GELU, in place.
void gelu(Tensor& x);

void relu(Tensor& x);

/// Row-wise softmax over the last dimension of a 2-D view [rows, cols].
void softmax_rows(float* data, int rows, int cols);

/// Strided patch conv: input [3, H, W], weight [D, 3, P, P], bias [D],
/// stride = P. Output [H/P, W/P, D].
Tensor patch_embed(const Tensor& image, const Tensor& weight, const Tensor& bias, int patch);

/// 1x1 conv on [C, H, W] -> [D, H, W]. weight [D, C, 1, 1].
Tensor conv1x1(const Tensor& x, const Tensor& weight);

/// 3x3 conv, padding 1, on [C, H, W] -> [D, H, W]. weight [D, C, 3, 3].
Tensor conv3x3(const Tensor& x, const Tensor& weight);

/// Transposed conv, kernel 2 stride 2: [C, H, W] -> [D, 2H, 2W].
/// weight [C, D, 2, 2] (PyTorch ConvTranspose2d layout), bias [D].
Tensor conv_transpose2x2(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Bilinear resize of a [C, H, W] tensor (half-pixel centers).
Tensor resize_bilinear_chw(const Tensor& x, int out_h, int out_w);

/// Linear interpolation of a [L, C] table to [out_len, C] rows.
Tensor resize_rows_linear(const Tensor& table, int out_len);

}  // namespace gescd::vit
