#include "gescd/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace gescd {

void Transform::apply(double x, double y, double& ox, double& oy) const {
    const double w = matrix[2][0] * x + matrix[2][1] * y + matrix[2][2];
    ox = (matrix[0][0] * x + matrix[0][1] * y + matrix[0][2]) / w;
    oy = (matrix[1][0] * x + matrix[1][1] * y + matrix[1][2]) / w;
}

Transform Transform::inverse() const {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = matrix[r][c];
    if (std::abs(m.determinant()) < 1e-8)
        throw Error(ErrorCode::InvalidArgument, "transform is not invertible");
    const Eigen::Matrix3d inv = m.inverse();
    Transform t;
    const double scale = inv(2, 2);
    if (std::abs(scale) < 1e-12)
        throw Error(ErrorCode::InvalidArgument, "transform inverse is degenerate");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.matrix[r][c] = inv(r, c) / scale;
    t.inlier_count = inlier_count;
    t.inlier_ratio = inlier_ratio;
    return t;
}

bool Transform::is_identity(double tol) const {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const double expected = r == c ? 1.0 : 0.0;
            if (std::abs(matrix[r][c] - expected) > tol) return false;
        }
    return true;
}

void RansacConfig::validate() const {
    if (max_iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "ransac max_iterations must be >= 1");
    if (inlier_threshold <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "ransac inlier_threshold must be > 0");
}

namespace {

struct Normalization {
    double cx = 0, cy = 0, scale = 1;
};

Normalization normalization_for(const std::vector<PointPair>& matches, bool side_a) {
    Normalization n;
    for (const PointPair& m : matches) {
        n.cx += side_a ? m.xa : m.xb;
        n.cy += side_a ? m.ya : m.yb;
    }
    n.cx /= matches.size();
    n.cy /= matches.size();
    double dist = 0;
    for (const PointPair& m : matches) {
        const double dx = (side_a ? m.xa : m.xb) - n.cx;
        const double dy = (side_a ? m.ya : m.yb) - n.cy;
        dist += std::sqrt(dx * dx + dy * dy);
    }
    dist /= matches.size();
    n.scale = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
    return n;
}

double reprojection_error(const Transform& t, const PointPair& m) {
    double px, py;
    t.apply(m.xb, m.yb, px, py);
    const double dx = px - m.xa, dy = py - m.ya;
    return std::sqrt(dx * dx + dy * dy);
}

bool sample_degenerate(const std::vector<PointPair>& matches, const int idx[4], bool side_a) {
    // Rejects samples with any collinear triple (cross-product area test).
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k) {
                const PointPair& p = matches[idx[i]];
                const PointPair& q = matches[idx[j]];
                const PointPair& r = matches[idx[k]];
                const double ax = side_a ? p.xa : p.xb, ay = side_a ? p.ya : p.yb;
                const double bx = side_a ? q.xa : q.xb, by = side_a ? q.ya : q.yb;
                const double cx = side_a ? r.xa : r.xb, cy = side_a ? r.ya : r.yb;
                const double area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
                if (std::abs(area) < 1e-6) return true;
            }
    return false;
}

}  // namespace

Transform fit_homography_dlt(const std::vector<PointPair>& matches) {
    if (matches.size() < 4)
        throw Error(ErrorCode::InvalidArgument, "homography needs at least 4 correspondences");

    const Normalization na = normalization_for(matches, true);
    const Normalization nb = normalization_for(matches, false);

    Eigen::MatrixXd a(2 * matches.size(), 9);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const double xa = (matches[i].xa - na.cx) * na.scale;
        const double ya = (matches[i].ya - na.cy) * na.scale;
        const double xb = (matches[i].xb - nb.cx) * nb.scale;
        const double yb = (matches[i].yb - nb.cy) * nb.scale;
        a.row(2 * i) << -xb, -yb, -1, 0, 0, 0, xa * xb, xa * yb, xa;
        a.row(2 * i + 1) << 0, 0, 0, -xb, -yb, -1, ya * xb, ya * yb, ya;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);

    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

    // Undo the Hartley normalization: H = Ta^{-1} * Hn * Tb.
    Eigen::Matrix3d ta, tb;
    ta << na.scale, 0, -na.scale * na.cx, 0, na.scale, -na.scale * na.cy, 0, 0, 1;
    tb << nb.scale, 0, -nb.scale * nb.cx, 0, nb.scale, -nb.scale * nb.cy, 0, 0, 1;
    Eigen::Matrix3d full = ta.inverse() * hn * tb;

    if (std::abs(full(2, 2)) < 1e-12)
        throw Error(ErrorCode::RegistrationFailure, "degenerate homography fit");
    full /= full(2, 2);
    if (std::abs(full.determinant()) < 1e-8)
        throw Error(ErrorCode::RegistrationFailure, "homography fit is singular");

    Transform t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.matrix[r][c] = full(r, c);
    return t;
}

Transform ransac_homography(const std::vector<PointPair>& matches, const RansacConfig& cfg) {
    cfg.validate();
    if (matches.size() < 4)
        throw Error(ErrorCode::InvalidArgument, "ransac needs at least 4 matches");

    std::mt19937_64 rng(cfg.random_seed);
    std::uniform_int_distribution<std::size_t> pick(0, matches.size() - 1);

    int best_inliers = -1;
    Transform best;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        int idx[4];
        bool distinct = false;
        for (int attempt = 0; attempt < 32 && !distinct; ++attempt) {
            for (int& v : idx) v = static_cast<int>(pick(rng));
            distinct = true;
            for (int i = 0; i < 4 && distinct; ++i)
                for (int j = i + 1; j < 4; ++j)
                    if (idx[i] == idx[j]) {
                        distinct = false;
                        break;
                    }
        }
        if (!distinct) continue;
        if (sample_degenerate(matches, idx, true) || sample_degenerate(matches, idx, false))
            continue;

        std::vector<PointPair> sample = {matches[idx[0]], matches[idx[1]], matches[idx[2]],
                                         matches[idx[3]]};
        Transform model;
        try {
            model = fit_homography_dlt(sample);
        } catch (const Error&) {
            continue;
        }

        int inliers = 0;
        for (const PointPair& m : matches)
            if (reprojection_error(model, m) <= cfg.inlier_threshold) ++inliers;
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best = model;
        }
    }

    if (best_inliers < std::max(cfg.min_inliers, 4))
        throw Error(ErrorCode::RegistrationFailure,
                    "ransac consensus too small: " + std::to_string(std::max(best_inliers, 0)) +
                        " < " + std::to_string(std::max(cfg.min_inliers, 4)));

    // Refit on the consensus set, then report inliers of the refined model.
    std::vector<PointPair> consensus;
    for (const PointPair& m : matches)
        if (reprojection_error(best, m) <= cfg.inlier_threshold) consensus.push_back(m);
    Transform refined = best;
    try {
        refined = fit_homography_dlt(consensus);
    } catch (const Error&) {
        refined = best;  // keep the sample model if the refit degenerates
    }
    int inliers = 0;
    for (const PointPair& m : matches)
        if (reprojection_error(refined, m) <= cfg.inlier_threshold) ++inliers;
    if (inliers < best_inliers) {
        refined = best;
        inliers = best_inliers;
    }
    refined.inlier_count = inliers;
    refined.inlier_ratio = static_cast<double>(inliers) / matches.size();
    return refined;
}

namespace {

struct Corner {
    int x = 0, y = 0;
    double response = 0;
};

std::vector<double> to_luma(const Image& img) {
    std::vector<double> luma(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* p = img.at(x, y);
            luma[static_cast<std::size_t>(y) * img.width + x] = luminance(p[0], p[1], p[2]);
        }
    return luma;
}

std::vector<Corner> harris_corners(const std::vector<double>& luma, int w, int h, int max_corners) {
    auto lum = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return luma[static_cast<std::size_t>(y) * w + x];
    };

    // Sobel gradients and structure-tensor products.
    std::vector<double> ixx(luma.size()), iyy(luma.size()), ixy(luma.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = (lum(x + 1, y - 1) + 2 * lum(x + 1, y) + lum(x + 1, y + 1)) -
                              (lum(x - 1, y - 1) + 2 * lum(x - 1, y) + lum(x - 1, y + 1));
            const double gy = (lum(x - 1, y + 1) + 2 * lum(x, y + 1) + lum(x + 1, y + 1)) -
                              (lum(x - 1, y - 1) + 2 * lum(x, y - 1) + lum(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }

    // 5x5 box smoothing of the products, then the Harris response.
    std::vector<double> resp(luma.size(), 0.0);
    double max_resp = 0.0;
    constexpr int r = 2;
    constexpr double k = 0.04;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sxx = 0, syy = 0, sxy = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
                    sxx += ixx[i];
                    syy += iyy[i];
                    sxy += ixy[i];
                }
            const double det = sxx * syy - sxy * sxy;
            const double tr = sxx + syy;
            const double rv = det - k * tr * tr;
            resp[static_cast<std::size_t>(y) * w + x] = rv;
            max_resp = std::max(max_resp, rv);
        }
    if (max_resp <= 0.0) return {};

    const double floor = 0.01 * max_resp;
    std::vector<Corner> corners;
    constexpr int border = 5;  // descriptor patch must fit
    for (int y = border; y < h - border; ++y)
        for (int x = border; x < w - border; ++x) {
            const double v = resp[static_cast<std::size_t>(y) * w + x];
            if (v < floor) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (resp[static_cast<std::size_t>(y + dy) * w + (x + dx)] > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) corners.push_back({x, y, v});
        }

    std::sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(corners.size()) > max_corners) corners.resize(max_corners);
    return corners;
}

using Descriptor = std::vector<double>;

Descriptor describe(const std::vector<double>& luma, int w, int h, const Corner& c) {
    constexpr int r = 4;  // 9x9 patch
    Descriptor d;
    d.reserve((2 * r + 1) * (2 * r + 1));
    double mean = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double v = luma[static_cast<std::size_t>(c.y + dy) * w + (c.x + dx)];
            d.push_back(v);
            mean += v;
        }
    mean /= d.size();
    double norm = 0;
    for (double& v : d) {
        v -= mean;
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 1e-9)
        for (double& v : d) v /= norm;
    (void)h;
    return d;
}

double sqdist(const Descriptor& a, const Descriptor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<PointPair> match_keypoints(const Image& img_a, const Image& img_b) {
    if (!img_a.same_size(img_b))
        throw Error(ErrorCode::InvalidArgument, "registration inputs must share a resolution");

    constexpr int kMaxCorners = 600;
    const std::vector<double> la = to_luma(img_a);
    const std::vector<double> lb = to_luma(img_b);
    const std::vector<Corner> ca = harris_corners(la, img_a.width, img_a.height, kMaxCorners);
    const std::vector<Corner> cb = harris_corners(lb, img_b.width, img_b.height, kMaxCorners);
    if (ca.empty() || cb.empty()) return {};

    std::vector<Descriptor> da(ca.size()), db(cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) da[i] = describe(la, img_a.width, img_a.height, ca[i]);
    for (std::size_t i = 0; i < cb.size(); ++i) db[i] = describe(lb, img_b.width, img_b.height, cb[i]);

    // Mutual nearest neighbors with Lowe's ratio test.
    constexpr double kRatio = 0.85;
    std::vector<int> best_ab(ca.size(), -1);
    for (std::size_t i = 0; i < ca.size(); ++i) {
        double d1 = 1e30, d2 = 1e30;
        int j1 = -1;
        for (std::size_t j = 0; j < cb.size(); ++j) {
            const double d = sqdist(da[i], db[j]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                j1 = static_cast<int>(j);
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (j1 >= 0 && d1 <= kRatio * kRatio * d2) best_ab[i] = j1;
    }
    std::vector<int> best_ba(cb.size(), -1);
    for (std::size_t j = 0; j < cb.size(); ++j) {
        double d1 = 1e30;
        int i1 = -1;
        for (std::size_t i = 0; i < ca.size(); ++i) {
            const double d = sqdist(da[i], db[j]);
            if (d < d1) {
                d1 = d;
                i1 = static_cast<int>(i);
            }
        }
        best_ba[j] = i1;
    }

    std::vector<PointPair> matches;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const int j = best_ab[i];
        if (j >= 0 && best_ba[j] == static_cast<int>(i))
            matches.push_back({static_cast<double>(ca[i].x), static_cast<double>(ca[i].y),
                               static_cast<double>(cb[j].x), static_cast<double>(cb[j].y)});
    }
    return matches;
}

Transform estimate_transform(const Image& img_a, const Image& img_b, const RansacConfig& cfg) {
    const std::vector<PointPair> matches = match_keypoints(img_a, img_b);
    if (matches.size() < 4)
        throw Error(ErrorCode::RegistrationFailure,
                    "not enough keypoint matches for registration (" +
                        std::to_string(matches.size()) + ")");
    return ransac_homography(matches, cfg);
}

Image warp(const Image& image, const Transform& t) {
    const Transform inv = t.inverse();  // throws on non-invertible input
    Image out(image.width, image.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            double sx, sy;
            inv.apply(x, y, sx, sy);
            std::uint8_t* dst = out.at(x, y);
            if (sx < 0 || sy < 0 || sx > image.width - 1 || sy > image.height - 1) {
                dst[0] = dst[1] = dst[2] = 0;
                continue;
            }
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, image.width - 1);
            const int y1 = std::min(y0 + 1, image.height - 1);
            const double wx = sx - x0, wy = sy - y0;
            const std::uint8_t* p00 = image.at(x0, y0);
            const std::uint8_t* p10 = image.at(x1, y0);
            const std::uint8_t* p01 = image.at(x0, y1);
            const std::uint8_t* p11 = image.at(x1, y1);
            for (int c = 0; c < 3; ++c) {
                const double top = p00[c] + (p10[c] - p00[c]) * wx;
                const double bot = p01[c] + (p11[c] - p01[c]) * wx;
                const double v = top + (bot - top) * wy;
                dst[c] = static_cast<std::uint8_t>(
                    std::clamp(static_cast<int>(std::lround(v)), 0, 255));
            }
        }
    return out;
}

BinaryMask warp_mask(const BinaryMask& mask, const Transform& t) {
    const Transform inv = t.inverse();
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            double sx, sy;
            inv.apply(x, y, sx, sy);
            const int xi = static_cast<int>(std::lround(sx));
            const int yi = static_cast<int>(std::lround(sy));
            if (xi < 0 || yi < 0 || xi >= mask.width || yi >= mask.height) continue;
            out.at(x, y) = mask.at(xi, yi);
        }
    return out;
}

}  // namespace gescd
