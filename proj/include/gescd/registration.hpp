#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gescd/image.hpp"

namespace gescd {

/// Planar homography mapping img_b coordinates into img_a's frame,
/// normalized so matrix[2][2] == 1.
struct Transform {
    std::array<std::array<double, 3>, 3> matrix = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    int inlier_count = 0;
    double inlier_ratio = 0.0;

    static Transform identity() { return Transform{}; }

    /// Applies the homography to a point in img_b's frame.
    void apply(double x, double y, double& ox, double& oy) const;

    Transform inverse() const;
    bool is_identity(double tol = 1e-12) const;
};

struct RansacConfig {
    int max_iterations = 2000;
    double inlier_threshold = 3.0;  // pixels
    int min_inliers = 12;
    std::uint64_t random_seed = 42;

    void validate() const;
};

struct PointPair {
    double xa = 0, ya = 0;  // point in img_a
    double xb = 0, yb = 0;  // corresponding point in img_b
};

/// Least-squares homography from >= 4 correspondences via the normalized
/// direct linear transform. Throws on degenerate configurations.
Transform fit_homography_dlt(const std::vector<PointPair>& matches);

/// Seeded RANSAC around the 4-point DLT, refit on the final consensus set.
/// Deterministic for a fixed seed. Throws Error{InvalidArgument} for < 4
/// matches and Error{RegistrationFailure} when consensus < min_inliers.
Transform ransac_homography(const std::vector<PointPair>& matches, const RansacConfig& cfg);

/// Detects corners on both images, matches descriptors, and runs RANSAC.
/// Throws Error{RegistrationFailure} when not enough consensus exists
/// (textureless inputs included); callers fall back to identity.
Transform estimate_transform(const Image& img_a, const Image& img_b, const RansacConfig& cfg);

/// Resamples `image` (in img_b's frame) into img_a's frame under t, with
/// bilinear interpolation; out-of-frame pixels are 0.
Image warp(const Image& image, const Transform& t);

/// Nearest-neighbor warp of a binary mask from img_b's frame into img_a's.
BinaryMask warp_mask(const BinaryMask& mask, const Transform& t);

/// Deterministic Harris corners + patch descriptor matching; exposed for
/// tests. Returns matches as (point in a, point in b).
std::vector<PointPair> match_keypoints(const Image& img_a, const Image& img_b);

}  // namespace gescd
