#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "gescd/image.hpp"

namespace gescd::testing {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic per-pixel noise in [-amplitude, amplitude].
inline int pixel_noise(int x, int y, int channel, std::uint64_t seed, int amplitude) {
    if (amplitude <= 0) return 0;
    const std::uint64_t h = splitmix64(
        (static_cast<std::uint64_t>(x) << 40) ^ (static_cast<std::uint64_t>(y) << 20) ^
        (static_cast<std::uint64_t>(channel) << 8) ^ seed);
    return static_cast<int>(h % (2 * amplitude + 1)) - amplitude;
}

inline std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v)); }

/// Structured test scene: colored background bands plus a few rectangles and
/// a disk, with optional per-pixel noise. Colors stay away from the
/// quantization boundaries so noise does not shatter the segments.
inline Image make_scene(int w, int h, std::uint64_t noise_seed = 0, int noise_amp = 0) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Midtone background with a gentle drift, strong saturated
            // landmarks, and a distinct "wall" filling the lower-right
            // quadrant (the region recolor_quadrant repaints). Colors keep
            // a noise-amplitude margin from the 128 quantization boundary.
            int r = 85 + 10 * x / std::max(1, w - 1);
            int g = 92 + 8 * y / std::max(1, h - 1);
            int b = 108 - 10 * y / std::max(1, h - 1);
            // Building block.
            if (x > w / 10 && x < w * 2 / 5 && y > h / 5 && y < h * 3 / 5) {
                r = 200;
                g = 60;
                b = 40;
            }
            // Second block, below-left of the wall.
            if (x > w / 12 && x < w * 2 / 5 && y > h * 17 / 25 && y < h * 23 / 25) {
                r = 60;
                g = 185;
                b = 60;
            }
            // Disk.
            const double dx = x - w * 0.62, dy = y - h * 0.25;
            if (dx * dx + dy * dy < (w * 0.08) * (w * 0.08)) {
                r = 50;
                g = 170;
                b = 200;
            }
            // Quadrant wall.
            if (x >= w / 2 && y >= h / 2) {
                r = 60;
                g = 150;
                b = 170;
            }
            std::uint8_t* p = img.at(x, y);
            p[0] = clamp8(r + pixel_noise(x, y, 0, noise_seed, noise_amp));
            p[1] = clamp8(g + pixel_noise(x, y, 1, noise_seed, noise_amp));
            p[2] = clamp8(b + pixel_noise(x, y, 2, noise_seed, noise_amp));
        }
    return img;
}

/// Repaints the lower-right quadrant wall with an opposing hue (keeps noise).
inline Image recolor_quadrant(const Image& src, std::uint64_t noise_seed = 0, int noise_amp = 0) {
    Image img = src;
    for (int y = img.height / 2; y < img.height; ++y)
        for (int x = img.width / 2; x < img.width; ++x) {
            std::uint8_t* p = img.at(x, y);
            p[0] = clamp8(210 + pixel_noise(x, y, 0, noise_seed, noise_amp));
            p[1] = clamp8(60 + pixel_noise(x, y, 1, noise_seed, noise_amp));
            p[2] = clamp8(40 + pixel_noise(x, y, 2, noise_seed, noise_amp));
        }
    return img;
}

/// Inserts a bright disk; returns its mask through out_mask.
inline Image insert_object(const Image& src, BinaryMask& out_mask) {
    Image img = src;
    out_mask = BinaryMask(img.width, img.height);
    const double cx = img.width * 0.72, cy = img.height * 0.22;
    const double radius = img.width * 0.13;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy >= radius * radius) continue;
            std::uint8_t* p = img.at(x, y);
            p[0] = 230;
            p[1] = 40;
            p[2] = 40;
            out_mask.at(x, y) = 1;
        }
    return img;
}

/// Corner-rich deterministic texture: random 8-px color blocks plus noise.
inline Image make_textured(int w, int h, std::uint64_t seed, int noise_amp = 4) {
    Image img(w, h);
    const int block = 8;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint64_t cell = splitmix64(
                seed ^ (static_cast<std::uint64_t>(y / block) << 32) ^
                static_cast<std::uint64_t>(x / block));
            std::uint8_t* p = img.at(x, y);
            p[0] = clamp8(static_cast<int>(cell & 0xff) + pixel_noise(x, y, 0, seed + 1, noise_amp));
            p[1] = clamp8(static_cast<int>((cell >> 8) & 0xff) +
                          pixel_noise(x, y, 1, seed + 1, noise_amp));
            p[2] = clamp8(static_cast<int>((cell >> 16) & 0xff) +
                          pixel_noise(x, y, 2, seed + 1, noise_amp));
        }
    return img;
}

inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<std::uint64_t> counter{0};
        const auto n = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                ("gescd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

}  // namespace gescd::testing
