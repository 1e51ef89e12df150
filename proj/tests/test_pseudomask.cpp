#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gescd/pseudomask.hpp"
#include "gescd/synthetic_backend.hpp"

using namespace gescd;

namespace {

FacetStack make_stack(int heads, int gh, int gw, int channels) {
    FacetStack f;
    f.kind = FacetKind::Key;
    f.layer = 0;
    f.heads = heads;
    f.grid_h = gh;
    f.grid_w = gw;
    f.channels = channels;
    f.data.assign(static_cast<std::size_t>(heads) * gh * gw * channels, 0.0f);
    return f;
}

}  // namespace

TEST_CASE("cosine of identical stacks is exactly one") {
    std::mt19937 rng(17);
    FacetStack f = make_stack(2, 3, 3, 4);
    for (auto& v : f.data) v = std::uniform_real_distribution<float>(-2, 2)(rng);
    const SimilarityMap s = correlate_heads(f, f, 9, 9);
    for (double v : s.map.data) CHECK(v == 1.0);
}

TEST_CASE("orthogonal vectors give zero similarity") {
    FacetStack a = make_stack(1, 1, 1, 2);
    FacetStack b = make_stack(1, 1, 1, 2);
    a.data = {1.0f, 0.0f};
    b.data = {0.0f, 1.0f};
    const SimilarityMap s = correlate_heads(a, b, 4, 4);
    for (double v : s.map.data) CHECK(v == 0.0);
}

TEST_CASE("head averaging: cosines 1.0 and 0.0 mix to 0.5") {
    FacetStack a = make_stack(2, 1, 1, 2);
    FacetStack b = make_stack(2, 1, 1, 2);
    // Head 0 identical, head 1 orthogonal.
    a.data = {3.0f, 0.0f, 1.0f, 0.0f};
    b.data = {3.0f, 0.0f, 0.0f, 1.0f};
    const SimilarityMap s = correlate_heads(a, b, 2, 2);
    for (double v : s.map.data) CHECK(v == 0.5);
}

TEST_CASE("zero-norm vectors contribute cosine 0") {
    FacetStack a = make_stack(1, 1, 1, 3);
    FacetStack b = make_stack(1, 1, 1, 3);
    a.data = {0.0f, 0.0f, 0.0f};
    b.data = {1.0f, 2.0f, 3.0f};
    const SimilarityMap s = correlate_heads(a, b, 1, 1);
    CHECK(s.map.data[0] == 0.0);

    // Both zero (bitwise equal): still 0, not 1.
    b.data = {0.0f, 0.0f, 0.0f};
    CHECK(correlate_heads(a, b, 1, 1).map.data[0] == 0.0);
}

TEST_CASE("correlate_heads rejects mismatched stacks") {
    FacetStack a = make_stack(1, 2, 2, 3);
    FacetStack b = make_stack(2, 2, 2, 3);
    CHECK_THROWS_AS((void)correlate_heads(a, b, 4, 4), Error);
    FacetStack c = make_stack(1, 2, 2, 3);
    c.kind = FacetKind::Value;
    CHECK_THROWS_AS((void)correlate_heads(a, c, 4, 4), Error);
}

TEST_CASE("correlation properties on random stacks") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<float> dist(-3, 3);
    for (int trial = 0; trial < 100; ++trial) {
        FacetStack a = make_stack(2, 4, 5, 6);
        FacetStack b = make_stack(2, 4, 5, 6);
        for (auto& v : a.data) v = dist(rng);
        for (auto& v : b.data) v = dist(rng);
        const SimilarityMap ab = correlate_heads(a, b, 10, 8);
        const SimilarityMap ba = correlate_heads(b, a, 10, 8);
        CHECK(ab.map.data == ba.map.data);  // bit-identical under swap
        for (double v : ab.map.data) {
            CHECK(v >= -1.0 - 1e-9);
            CHECK(v <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("skewness oracle values") {
    CHECK(skewness({0, 0, 0, 1}) == doctest::Approx(1.1547).epsilon(1e-3));
    CHECK(skewness({1, 2, 3}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(skewness({5, 5, 5, 5}) == 0.0);  // zero-variance convention
    CHECK_THROWS_AS((void)skewness({1.0}), Error);
}

TEST_CASE("mad oracle values") {
    CHECK(mad({1, 2, 3, 4}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mad({7, 7, 7}) == 0.0);
    CHECK(mad({0, 1}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS((void)mad({}), Error);
}

TEST_CASE("normalize_map window and conventions") {
    // mu = 0.5, MAD = 0.1 fixture: x -> (x - 0.2) / 0.6.
    SimilarityMap s;
    s.map = FloatMap(5, 1);
    s.map.data = {0.4, 0.4, 0.5, 0.6, 0.6};  // mu = 0.5, MAD = 0.08
    const double mu = 0.5, m = 0.08;
    const SimilarityMap n = normalize_map(s);
    CHECK(n.map.data[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(n.map.data[0] == doctest::Approx((0.4 - (mu - 3 * m)) / (6 * m)).epsilon(1e-12));

    // Window endpoints clip to exactly 0 and 1.
    SimilarityMap e;
    e.map = FloatMap(4, 1);
    e.map.data = {0.2, 0.8, 0.2, 0.8};  // mu = 0.5, MAD = 0.3
    const SimilarityMap en = normalize_map(e);
    // mu - 3*MAD = -0.4, span 1.8: 0.2 -> 1/3, 0.8 -> 2/3 (no clipping here).
    CHECK(en.map.data[0] == doctest::Approx((0.2 + 0.4) / 1.8).epsilon(1e-12));

    SimilarityMap clipped;
    clipped.map = FloatMap(5, 1);
    clipped.map.data = {0.0, 0.5, 0.5, 0.5, 1.0};
    const SimilarityMap cn = normalize_map(clipped);
    for (double v : cn.map.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    // Constant map: uniform convention, everything 1.0.
    SimilarityMap flat;
    flat.map = FloatMap(3, 3, 0.7);
    const SimilarityMap fn = normalize_map(flat);
    for (double v : fn.map.data) CHECK(v == 1.0);
}

TEST_CASE("normalize_map matches the window formula per pixel") {
    std::mt19937 rng(91);
    std::uniform_real_distribution<double> value(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        SimilarityMap s;
        s.map = FloatMap(7, 5);
        for (auto& v : s.map.data) v = value(rng);
        const double m = mad(s.map.data);
        double mu = 0;
        for (double v : s.map.data) mu += v;
        mu /= s.map.data.size();

        const SimilarityMap n = normalize_map(s);
        for (std::size_t i = 0; i < s.map.data.size(); ++i) {
            const double expect =
                std::clamp((s.map.data[i] - (mu - 3 * m)) / (6 * m), 0.0, 1.0);
            CHECK(n.map.data[i] == doctest::Approx(expect).epsilon(1e-12));
        }
        // Values at or beyond the window endpoints land exactly on 0 / 1.
        if (s.map.data[0] <= mu - 3 * m) CHECK(n.map.data[0] == 0.0);
        if (s.map.data[0] >= mu + 3 * m) CHECK(n.map.data[0] == 1.0);
    }
}

TEST_CASE("adaptive threshold branch values with reference constants") {
    const ThresholdParams p;
    const ThresholdDecision right = adaptive_threshold(0.5, p);
    CHECK_FALSE(right.use_zscore);
    CHECK(right.value == doctest::Approx(0.10).epsilon(1e-12));

    const ThresholdDecision left = adaptive_threshold(-0.25, p);
    CHECK_FALSE(left.use_zscore);
    CHECK(left.value == doctest::Approx(0.95).epsilon(1e-12));

    CHECK(adaptive_threshold(0.0, p).use_zscore);
    CHECK(adaptive_threshold(0.2, p).use_zscore);
    CHECK(adaptive_threshold(-0.2, p).use_zscore);
    CHECK_FALSE(adaptive_threshold(std::nextafter(0.2, 1.0), p).use_zscore);

    // Clipping to [0,1] on the left branch.
    CHECK(adaptive_threshold(-5.0, p).value == 1.0);
}

TEST_CASE("threshold monotonicity within branches") {
    const ThresholdParams p;
    double prev = 0.0;
    for (double g = 0.21; g < 3.0; g += 0.05) {
        const double v = adaptive_threshold(g, p).value;
        CHECK(v >= prev);
        prev = v;
    }
    prev = 0.0;
    for (double g = -0.21; g > -3.0; g -= 0.05) {
        const double v = adaptive_threshold(g, p).value;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("binarize: uniform map yields empty mask") {
    SimilarityMap flat;
    flat.map = FloatMap(4, 4, 1.0);
    const SimilarityMap norm = normalize_map(flat);
    const PseudoMask pm = binarize(norm, flat, 0.0, ThresholdParams{});
    CHECK(pm.mask.area() == 0);
}

TEST_CASE("binarize skewed branch uses strict less-than on the normalized map") {
    // gamma = 0.5 -> threshold 0.10; values {0.05, 0.5} -> only 0.05 flagged.
    SimilarityMap raw, norm;
    raw.map = FloatMap(2, 1);
    raw.map.data = {0.05, 0.5};
    norm.map = FloatMap(2, 1);
    norm.map.data = {0.05, 0.5};
    const PseudoMask pm = binarize(norm, raw, 0.5, ThresholdParams{});
    CHECK(pm.mask.data[0] == 1);
    CHECK(pm.mask.data[1] == 0);
    CHECK(pm.threshold_used == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(pm.skew == 0.5);
    CHECK_FALSE(pm.zscore_branch);
}

TEST_CASE("binarize moderate branch: brute-force count on a uniform grid") {
    SimilarityMap raw;
    raw.map = FloatMap(10, 10);
    for (int i = 0; i < 100; ++i) raw.map.data[i] = static_cast<double>(i);
    const SimilarityMap norm = normalize_map(raw);

    double mean = 49.5;
    double var = 0;
    for (int i = 0; i < 100; ++i) var += (i - mean) * (i - mean);
    var /= 100.0;
    const double thresh = mean - 0.52 * std::sqrt(var);
    int expected = 0;
    for (int i = 0; i < 100; ++i) expected += i < thresh;

    const PseudoMask pm = binarize(norm, raw, 0.0, ThresholdParams{});
    CHECK(pm.zscore_branch);
    CHECK(pm.mask.area() == expected);
    CHECK(expected == 35);  // frozen from the brute-force threshold count
    for (int i = 0; i < 100; ++i) CHECK(pm.mask.data[i] == (i < thresh ? 1 : 0));
}

TEST_CASE("binarize property: matches per-pixel oracle on random maps") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> value(-1, 1);
    std::uniform_real_distribution<double> gamma_dist(-2, 2);
    for (int trial = 0; trial < 200; ++trial) {
        SimilarityMap raw;
        raw.map = FloatMap(8, 8);
        for (auto& v : raw.map.data) v = value(rng);
        const SimilarityMap norm = normalize_map(raw);
        const double gamma = gamma_dist(rng);
        const ThresholdParams p;
        const PseudoMask pm = binarize(norm, raw, gamma, p);

        // Oracle: recompute the branch decision per pixel.
        const ThresholdDecision d = adaptive_threshold(gamma, p);
        for (std::size_t i = 0; i < raw.map.data.size(); ++i) {
            bool expect;
            if (d.use_zscore) {
                double mean = 0;
                for (double v : raw.map.data) mean += v;
                mean /= raw.map.data.size();
                double var = 0;
                for (double v : raw.map.data) var += (v - mean) * (v - mean);
                var /= raw.map.data.size();
                expect = raw.map.data[i] < mean + p.z_value * std::sqrt(var);
            } else {
                expect = norm.map.data[i] < d.value;
            }
            CHECK(pm.mask.data[i] == (expect ? 1 : 0));
        }
    }
}

TEST_CASE("z-score branch is scale-equivariant across affine normalization") {
    // When no value clips, thresholding raw at mu + z*sigma flags the same
    // pixels as thresholding the normalized map at its own mu + z*sigma.
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> value(0.3, 0.7);
    int verified = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SimilarityMap raw;
        raw.map = FloatMap(8, 8);
        for (auto& v : raw.map.data) v = value(rng);
        const SimilarityMap norm = normalize_map(raw);
        // Skip trials where clipping bent the affine map.
        if (norm.min_value <= 0.0 || norm.max_value >= 1.0) continue;
        ++verified;

        auto zflags = [](const std::vector<double>& xs) {
            double mean = 0;
            for (double v : xs) mean += v;
            mean /= xs.size();
            double var = 0;
            for (double v : xs) var += (v - mean) * (v - mean);
            var /= xs.size();
            const double t = mean - 0.52 * std::sqrt(var);
            std::vector<bool> out;
            for (double v : xs) out.push_back(v < t);
            return out;
        };
        CHECK(zflags(raw.map.data) == zflags(norm.map.data));
    }
    CHECK(verified >= 50);
}

TEST_CASE("generate_pseudomask: identical images -> empty mask") {
    SyntheticBackend backend;
    const Image img = testing::make_scene(32, 32, 11, 12);
    const PseudoMask pm =
        generate_pseudomask(backend, img, img, 1, FacetKind::Key, ThresholdParams{});
    CHECK(pm.mask.area() == 0);
}

TEST_CASE("generate_pseudomask: recolored quadrant is localized") {
    SyntheticBackend backend;
    const Image img0 = testing::make_scene(64, 64, 100, 25);
    const Image img1 = testing::recolor_quadrant(testing::make_scene(64, 64, 200, 25), 200, 25);

    const PseudoMask pm =
        generate_pseudomask(backend, img0, img1, 1, FacetKind::Key, ThresholdParams{});
    BinaryMask quadrant(64, 64);
    for (int y = 32; y < 64; ++y)
        for (int x = 32; x < 64; ++x) quadrant.at(x, y) = 1;
    CHECK(testing::mask_iou(pm.mask, quadrant) >= 0.5);
}

TEST_CASE("generate_pseudomask commutativity is bit-exact") {
    SyntheticBackend backend;
    const Image a = testing::make_scene(48, 48, 1, 20);
    const Image b = testing::recolor_quadrant(testing::make_scene(48, 48, 2, 20), 2, 20);
    const PseudoMask ab = generate_pseudomask(backend, a, b, 1, FacetKind::Key, ThresholdParams{});
    const PseudoMask ba = generate_pseudomask(backend, b, a, 1, FacetKind::Key, ThresholdParams{});
    CHECK(ab.mask.data == ba.mask.data);
    CHECK(ab.threshold_used == ba.threshold_used);
    CHECK(ab.skew == ba.skew);
}
