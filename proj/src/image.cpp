#include "gescd/image.hpp"

#include <algorithm>
#include <cmath>

namespace gescd {

double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Source coordinate for destination index i under half-pixel-center mapping.
inline double src_coord(int i, double scale) { return (i + 0.5) * scale - 0.5; }

}  // namespace

Image resize_bilinear(const Image& src, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0)
        throw Error(ErrorCode::InvalidArgument, "resize target must be positive");
    if (src.width == out_width && src.height == out_height) return src;

    Image dst(out_width, out_height);
    const double sx = static_cast<double>(src.width) / out_width;
    const double sy = static_cast<double>(src.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const double fy = src_coord(y, sy);
        const int y0 = clampi(static_cast<int>(std::floor(fy)), 0, src.height - 1);
        const int y1 = clampi(y0 + 1, 0, src.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_width; ++x) {
            const double fx = src_coord(x, sx);
            const int x0 = clampi(static_cast<int>(std::floor(fx)), 0, src.width - 1);
            const int x1 = clampi(x0 + 1, 0, src.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            const std::uint8_t* p00 = src.at(x0, y0);
            const std::uint8_t* p10 = src.at(x1, y0);
            const std::uint8_t* p01 = src.at(x0, y1);
            const std::uint8_t* p11 = src.at(x1, y1);
            std::uint8_t* out = dst.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double top = p00[c] + (p10[c] - p00[c]) * wx;
                const double bot = p01[c] + (p11[c] - p01[c]) * wx;
                const double v = top + (bot - top) * wy;
                out[c] = static_cast<std::uint8_t>(clampi(static_cast<int>(std::lround(v)), 0, 255));
            }
        }
    }
    return dst;
}

BinaryMask resize_mask_nearest(const BinaryMask& src, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0)
        throw Error(ErrorCode::InvalidArgument, "resize target must be positive");
    if (src.width == out_width && src.height == out_height) return src;

    BinaryMask dst(out_width, out_height);
    const double sx = static_cast<double>(src.width) / out_width;
    const double sy = static_cast<double>(src.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const int yy = clampi(static_cast<int>(std::lround(src_coord(y, sy))), 0, src.height - 1);
        for (int x = 0; x < out_width; ++x) {
            const int xx = clampi(static_cast<int>(std::lround(src_coord(x, sx))), 0, src.width - 1);
            dst.at(x, y) = src.at(xx, yy) ? 1 : 0;
        }
    }
    return dst;
}

FloatMap resize_map_bilinear(const FloatMap& src, int out_width, int out_height) {
    if (out_width <= 0 || out_height <= 0)
        throw Error(ErrorCode::InvalidArgument, "resize target must be positive");
    if (src.width == out_width && src.height == out_height) return src;

    FloatMap dst(out_width, out_height);
    const double sx = static_cast<double>(src.width) / out_width;
    const double sy = static_cast<double>(src.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const double fy = src_coord(y, sy);
        const int y0 = clampi(static_cast<int>(std::floor(fy)), 0, src.height - 1);
        const int y1 = clampi(y0 + 1, 0, src.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_width; ++x) {
            const double fx = src_coord(x, sx);
            const int x0 = clampi(static_cast<int>(std::floor(fx)), 0, src.width - 1);
            const int x1 = clampi(x0 + 1, 0, src.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            const double top = src.at(x0, y0) + (src.at(x1, y0) - src.at(x0, y0)) * wx;
            const double bot = src.at(x0, y1) + (src.at(x1, y1) - src.at(x0, y1)) * wx;
            dst.at(x, y) = top + (bot - top) * wy;
        }
    }
    return dst;
}

}  // namespace gescd
