#pragma once

#include "gescd/backend.hpp"
#include "gescd/image.hpp"

namespace gescd {

/// Per-pixel bi-temporal feature similarity at input-image resolution.
struct SimilarityMap {
    FloatMap map;
    double min_value = 0.0;
    double max_value = 0.0;

    void record_range();
};

/// Constants of the skewness-adaptive threshold function. Defaults follow
/// the reference configuration exactly.
struct ThresholdParams {
    double b_right = 0.05;
    double s_right = 0.1;
    double b_left = 0.7;
    double s_left = 1.0;
    double c = 1.0;
    double skew_band = 0.2;
    double z_value = -0.52;

    void validate() const;
};

/// Branch decision of the adaptive threshold function: either a threshold on
/// the normalized map, or a directive to threshold the raw map at mu + z*sigma.
struct ThresholdDecision {
    bool use_zscore = false;
    double value = 0.0;  // normalized-map threshold when !use_zscore
};

struct PseudoMask {
    BinaryMask mask;
    double threshold_used = 0.0;
    double skew = 0.0;
    bool zscore_branch = false;
};

/// Per-location cosine over heads, head-averaged, then bilinearly
/// interpolated to (out_width, out_height). Commutative in its arguments;
/// bitwise-identical facet vectors produce exactly 1.0. Zero-norm vectors
/// contribute cosine 0 at that location.
SimilarityMap correlate_heads(const FacetStack& f0, const FacetStack& f1, int out_width,
                              int out_height);

/// Fisher-Pearson moment coefficient g1 = m3 / m2^{3/2} (population form).
/// Returns 0 when the variance underflows (m2 < 1e-12). Requires >= 2 values.
double skewness(const std::vector<double>& values);

/// Mean absolute deviation about the mean. Requires a non-empty sample.
double mad(const std::vector<double>& values);

/// Robust min-max normalization over [mu - 3*MAD, mu + 3*MAD] with clipping
/// to [0,1]. A map with MAD < 1e-12 is declared uniform and maps to all 1.0.
SimilarityMap normalize_map(const SimilarityMap& s);

/// Skewness-adaptive threshold: right branch for gamma > skew_band, left
/// branch for gamma < -skew_band, z-score directive inside the band.
ThresholdDecision adaptive_threshold(double gamma, const ThresholdParams& p);

/// Applies the adaptive threshold. Skewed branches flag pixels whose
/// normalized value is strictly below the threshold; the z-score branch
/// flags raw values strictly below mu + z*sigma. A uniform map (raw MAD
/// < 1e-12) yields an empty mask.
PseudoMask binarize(const SimilarityMap& norm, const SimilarityMap& raw, double gamma,
                    const ThresholdParams& p);

struct PseudomaskResult {
    PseudoMask pseudo;
    SimilarityMap raw;
    SimilarityMap normalized;
};

/// Full initial pseudo-mask stage: facets -> correlation -> statistics ->
/// adaptive threshold. Commutative in (img0, img1).
PseudomaskResult generate_pseudomask_full(const Backend& backend, const Image& img0,
                                          const Image& img1, int layer, FacetKind kind,
                                          const ThresholdParams& p);

PseudoMask generate_pseudomask(const Backend& backend, const Image& img0, const Image& img1,
                               int layer, FacetKind kind, const ThresholdParams& p);

}  // namespace gescd
