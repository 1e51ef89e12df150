#include "vit/nn_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace gescd::vit {

namespace {
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;
}  // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    const int in = w.dim(1);
    const int out = w.dim(0);
    const int rows = static_cast<int>(x.numel() / in);
    Tensor y({rows, out});
    MapConst xm(x.ptr(), rows, in);
    MapConst wm(w.ptr(), out, in);
    MapMat ym(y.ptr(), rows, out);
    ym.noalias() = xm * wm.transpose();
    if (b.numel() == out)
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < out; ++c) y.ptr()[static_cast<std::size_t>(r) * out + c] += b.ptr()[c];
    return y;
}

void layernorm_lastdim(Tensor& x, const Tensor& weight, const Tensor& bias, float eps) {
    const int c = weight.dim(0);
    const std::int64_t rows = x.numel() / c;
    for (std::int64_t r = 0; r < rows; ++r) {
        float* p = x.ptr() + r * c;
        double mean = 0;
        for (int i = 0; i < c; ++i) mean += p[i];
        mean /= c;
        double var = 0;
        for (int i = 0; i < c; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int i = 0; i < c; ++i)
            p[i] = static_cast<float>((p[i] - mean) * inv * weight.ptr()[i] + bias.ptr()[i]);
    }
}

void layernorm_channels(Tensor& x, const Tensor& weight, const Tensor& bias, float eps) {
    const int c = x.dim(0);
    const int hw = static_cast<int>(x.numel() / c);
    for (int i = 0; i < hw; ++i) {
        double mean = 0;
        for (int ch = 0; ch < c; ++ch) mean += x.ptr()[static_cast<std::size_t>(ch) * hw + i];
        mean /= c;
        double var = 0;
        for (int ch = 0; ch < c; ++ch) {
            const double d = x.ptr()[static_cast<std::size_t>(ch) * hw + i] - mean;
            var += d * d;
        }
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int ch = 0; ch < c; ++ch) {
            float& v = x.ptr()[static_cast<std::size_t>(ch) * hw + i];
            v = static_cast<float>((v - mean) * inv * weight.ptr()[ch] + bias.ptr()[ch]);
        }
    }
}

void gelu(Tensor& x) {
    for (float& v : x.data)
        v = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
}

void relu(Tensor& x) {
    for (float& v : x.data) v = std::max(v, 0.0f);
}

void softmax_rows(float* data, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        float* p = data + static_cast<std::size_t>(r) * cols;
        float mx = p[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, p[c]);
        double sum = 0;
        for (int c = 0; c < cols; ++c) {
            p[c] = std::exp(p[c] - mx);
            sum += p[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < cols; ++c) p[c] = static_cast<float>(p[c] * inv);
    }
}

Tensor patch_embed(const Tensor& image, const Tensor& weight, const Tensor& bias, int patch) {
    const int ch = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int d = weight.dim(0);
    const int gh = h / patch, gw = w / patch;
    const int k = ch * patch * patch;

    // Unfold patches then one GEMM against the filter bank.
    Tensor cols({gh * gw, k});
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            float* dst = cols.ptr() + static_cast<std::size_t>(gy * gw + gx) * k;
            int idx = 0;
            for (int c = 0; c < ch; ++c)
                for (int py = 0; py < patch; ++py)
                    for (int px = 0; px < patch; ++px)
                        dst[idx++] = image.ptr()[(static_cast<std::size_t>(c) * h +
                                                  (gy * patch + py)) *
                                                     w +
                                                 (gx * patch + px)];
        }
    Tensor wf({d, k});
    std::copy(weight.data.begin(), weight.data.end(), wf.data.begin());
    Tensor out = linear(cols, wf, bias);  // [gh*gw, d]
    out.shape = {gh, gw, d};
    return out;
}

Tensor conv1x1(const Tensor& x, const Tensor& weight) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int d = weight.dim(0);
    Tensor out({d, h, w});
    MapConst xm(x.ptr(), c, h * w);
    MapConst wm(weight.ptr(), d, c);
    MapMat om(out.ptr(), d, h * w);
    om.noalias() = wm * xm;
    return out;
}

Tensor conv3x3(const Tensor& x, const Tensor& weight) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int d = weight.dim(0);
    Tensor out({d, h, w});
    for (int oc = 0; oc < d; ++oc)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double acc = 0;
                for (int ic = 0; ic < c; ++ic)
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx) {
                            const int sy = y + ky, sx = xx + kx;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            const float v =
                                x.ptr()[(static_cast<std::size_t>(ic) * h + sy) * w + sx];
                            const float wt =
                                weight.ptr()[((static_cast<std::size_t>(oc) * c + ic) * 3 +
                                              (ky + 1)) *
                                                 3 +
                                             (kx + 1)];
                            acc += static_cast<double>(v) * wt;
                        }
                out.ptr()[(static_cast<std::size_t>(oc) * h + y) * w + xx] =
                    static_cast<float>(acc);
            }
    return out;
}

Tensor conv_transpose2x2(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int d = weight.dim(1);
    Tensor out({d, 2 * h, 2 * w});
    for (int oc = 0; oc < d; ++oc) {
        const float b = bias.numel() == d ? bias.ptr()[oc] : 0.0f;
        float* dst = out.ptr() + static_cast<std::size_t>(oc) * 4 * h * w;
        std::fill(dst, dst + static_cast<std::size_t>(4) * h * w, b);
    }
    for (int ic = 0; ic < c; ++ic)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const float v = x.ptr()[(static_cast<std::size_t>(ic) * h + y) * w + xx];
                for (int oc = 0; oc < d; ++oc)
                    for (int ky = 0; ky < 2; ++ky)
                        for (int kx = 0; kx < 2; ++kx) {
                            const float wt =
                                weight.ptr()[((static_cast<std::size_t>(ic) * d + oc) * 2 + ky) *
                                                 2 +
                                             kx];
                            out.ptr()[(static_cast<std::size_t>(oc) * 2 * h + (2 * y + ky)) * 2 *
                                          w +
                                      (2 * xx + kx)] += v * wt;
                        }
            }
    return out;
}

Tensor resize_bilinear_chw(const Tensor& x, int out_h, int out_w) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h == out_h && w == out_w) return x;
    Tensor out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int ch = 0; ch < c; ++ch) {
        const float* src = x.ptr() + static_cast<std::size_t>(ch) * h * w;
        float* dst = out.ptr() + static_cast<std::size_t>(ch) * out_h * out_w;
        for (int y = 0; y < out_h; ++y) {
            const double fy = (y + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            const double wy = std::clamp(fy - y0, 0.0, 1.0);
            y0 = std::clamp(y0, 0, h - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            for (int xx = 0; xx < out_w; ++xx) {
                const double fx = (xx + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                const double wx = std::clamp(fx - x0, 0.0, 1.0);
                x0 = std::clamp(x0, 0, w - 1);
                const int x1 = std::min(x0 + 1, w - 1);
                const double top = src[static_cast<std::size_t>(y0) * w + x0] +
                                   (src[static_cast<std::size_t>(y0) * w + x1] -
                                    src[static_cast<std::size_t>(y0) * w + x0]) *
                                       wx;
                const double bot = src[static_cast<std::size_t>(y1) * w + x0] +
                                   (src[static_cast<std::size_t>(y1) * w + x1] -
                                    src[static_cast<std::size_t>(y1) * w + x0]) *
                                       wx;
                dst[static_cast<std::size_t>(y) * out_w + xx] =
                    static_cast<float>(top + (bot - top) * wy);
            }
        }
    }
    return out;
}

Tensor resize_rows_linear(const Tensor& table, int out_len) {
    const int len = table.dim(0), c = table.dim(1);
    if (len == out_len) return table;
    Tensor out({out_len, c});
    const double s = static_cast<double>(len) / out_len;
    for (int i = 0; i < out_len; ++i) {
        const double f = (i + 0.5) * s - 0.5;
        int i0 = static_cast<int>(std::floor(f));
        const double w = std::clamp(f - i0, 0.0, 1.0);
        i0 = std::clamp(i0, 0, len - 1);
        const int i1 = std::min(i0 + 1, len - 1);
        for (int ch = 0; ch < c; ++ch) {
            const double a = table.ptr()[static_cast<std::size_t>(i0) * c + ch];
            const double b = table.ptr()[static_cast<std::size_t>(i1) * c + ch];
            out.ptr()[static_cast<std::size_t>(i) * c + ch] = static_cast<float>(a + (b - a) * w);
        }
    }
    return out;
}

}  // namespace gescd::vit
