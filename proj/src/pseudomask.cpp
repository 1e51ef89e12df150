#include "gescd/pseudomask.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace gescd {

namespace {
constexpr double kVarianceFloor = 1e-12;
constexpr double kMadFloor = 1e-12;
}  // namespace

void SimilarityMap::record_range() {
    if (map.data.empty()) {
        min_value = max_value = 0.0;
        return;
    }
    auto [lo, hi] = std::minmax_element(map.data.begin(), map.data.end());
    min_value = *lo;
    max_value = *hi;
}

void ThresholdParams::validate() const {
    if (skew_band < 0.0) throw Error(ErrorCode::InvalidArgument, "skew_band must be >= 0");
}

SimilarityMap correlate_heads(const FacetStack& f0, const FacetStack& f1, int out_width,
                              int out_height) {
    if (!f0.same_shape(f1))
        throw Error(ErrorCode::InvalidArgument,
                    "facet stacks differ in kind, layer, or shape; cannot correlate");
    if (f0.heads < 1 || f0.grid_h < 1 || f0.grid_w < 1 || f0.channels < 1)
        throw Error(ErrorCode::InvalidArgument, "facet stack is empty");
    if (out_width <= 0 || out_height <= 0)
        throw Error(ErrorCode::InvalidArgument, "output size must be positive");

    FloatMap grid(f0.grid_w, f0.grid_h);
    const std::size_t vec_bytes = static_cast<std::size_t>(f0.channels) * sizeof(float);
    for (int gy = 0; gy < f0.grid_h; ++gy)
        for (int gx = 0; gx < f0.grid_w; ++gx) {
            double acc = 0.0;
            for (int n = 0; n < f0.heads; ++n) {
                const float* a = f0.at(n, gy, gx);
                const float* b = f1.at(n, gy, gx);
                // Bitwise-equal vectors are exactly maximally similar; this
                // keeps unchanged regions at 1.0 without rounding residue.
                if (std::memcmp(a, b, vec_bytes) == 0) {
                    bool zero = true;
                    for (int c = 0; c < f0.channels && zero; ++c) zero = a[c] == 0.0f;
                    acc += zero ? 0.0 : 1.0;
                    continue;
                }
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (int c = 0; c < f0.channels; ++c) {
                    dot += static_cast<double>(a[c]) * b[c];
                    na += static_cast<double>(a[c]) * a[c];
                    nb += static_cast<double>(b[c]) * b[c];
                }
                if (na <= 0.0 || nb <= 0.0) continue;  // zero-norm convention: cosine 0
                acc += dot / std::sqrt(na * nb);
            }
            grid.at(gx, gy) = acc / f0.heads;
        }

    SimilarityMap out;
    out.map = resize_map_bilinear(grid, out_width, out_height);
    out.record_range();
    return out;
}

double skewness(const std::vector<double>& values) {
    if (values.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "skewness needs at least 2 values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 < kVarianceFloor) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

double mad(const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "mad needs a non-empty sample");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double acc = 0.0;
    for (double v : values) acc += std::abs(v - mean);
    return acc / n;
}

SimilarityMap normalize_map(const SimilarityMap& s) {
    SimilarityMap out;
    out.map = FloatMap(s.map.width, s.map.height);

    const double m = mad(s.map.data);
    if (m < kMadFloor) {
        std::fill(out.map.data.begin(), out.map.data.end(), 1.0);
        out.record_range();
        return out;
    }
    double mean = 0.0;
    for (double v : s.map.data) mean += v;
    mean /= static_cast<double>(s.map.data.size());

    const double lo = mean - 3.0 * m;
    const double span = 6.0 * m;
    for (std::size_t i = 0; i < s.map.data.size(); ++i)
        out.map.data[i] = std::clamp((s.map.data[i] - lo) / span, 0.0, 1.0);
    out.record_range();
    return out;
}

ThresholdDecision adaptive_threshold(double gamma, const ThresholdParams& p) {
    p.validate();
    ThresholdDecision d;
    if (gamma > p.skew_band) {
        d.value = std::clamp(p.b_right + p.c * p.s_right * std::abs(gamma), 0.0, 1.0);
    } else if (gamma < -p.skew_band) {
        d.value = std::clamp(p.b_left + p.c * p.s_left * std::abs(gamma), 0.0, 1.0);
    } else {
        d.use_zscore = true;
    }
    return d;
}

PseudoMask binarize(const SimilarityMap& norm, const SimilarityMap& raw, double gamma,
                    const ThresholdParams& p) {
    if (norm.map.width != raw.map.width || norm.map.height != raw.map.height)
        throw Error(ErrorCode::InvalidArgument, "normalized and raw maps differ in size");

    PseudoMask out;
    out.mask = BinaryMask(raw.map.width, raw.map.height);
    out.skew = gamma;

    // Uniform raw map: no relative structure to threshold.
    if (mad(raw.map.data) < kMadFloor) {
        out.threshold_used = 0.0;
        return out;
    }

    const ThresholdDecision d = adaptive_threshold(gamma, p);
    if (d.use_zscore) {
        const double n = static_cast<double>(raw.map.data.size());
        double mean = 0.0;
        for (double v : raw.map.data) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : raw.map.data) {
            const double dd = v - mean;
            var += dd * dd;
        }
        var /= n;
        const double thresh = mean + p.z_value * std::sqrt(var);
        out.zscore_branch = true;
        out.threshold_used = thresh;
        for (std::size_t i = 0; i < raw.map.data.size(); ++i)
            out.mask.data[i] = raw.map.data[i] < thresh ? 1 : 0;
    } else {
        out.threshold_used = d.value;
        for (std::size_t i = 0; i < norm.map.data.size(); ++i)
            out.mask.data[i] = norm.map.data[i] < d.value ? 1 : 0;
    }
    return out;
}

PseudomaskResult generate_pseudomask_full(const Backend& backend, const Image& img0,
                                          const Image& img1, int layer, FacetKind kind,
                                          const ThresholdParams& p) {
    if (!img0.same_size(img1))
        throw Error(ErrorCode::InvalidArgument, "bi-temporal images must share a resolution");

    const FacetStack f0 = backend.extract_facets(img0, layer, kind);
    const FacetStack f1 = backend.extract_facets(img1, layer, kind);

    PseudomaskResult r;
    r.raw = correlate_heads(f0, f1, img0.width, img0.height);
    r.normalized = normalize_map(r.raw);
    const double gamma = skewness(r.raw.map.data);
    r.pseudo = binarize(r.normalized, r.raw, gamma, p);
    return r;
}

PseudoMask generate_pseudomask(const Backend& backend, const Image& img0, const Image& img1,
                               int layer, FacetKind kind, const ThresholdParams& p) {
    return generate_pseudomask_full(backend, img0, img1, layer, kind, p).pseudo;
}

}  // namespace gescd
