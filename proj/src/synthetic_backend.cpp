#include "gescd/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>

namespace gescd {

namespace {

struct PatchStats {
    double mean_r = 0, mean_g = 0, mean_b = 0;
    double mean_luma = 0;
    double std_luma = 0;
    double mean_grad = 0;
    // High-frequency +-1 pattern projections of luma; zero on locally
    // constant content, driven by fine texture and sensor noise otherwise.
    double hf_checker = 0;
    double hf_x = 0;
    double hf_y = 0;
};

struct StatsGrid {
    int gw = 0, gh = 0;
    std::vector<PatchStats> cells;
    PatchStats global;

    const PatchStats& at(int gx, int gy) const {
        return cells[static_cast<std::size_t>(gy) * gw + gx];
    }
    PatchStats& at(int gx, int gy) { return cells[static_cast<std::size_t>(gy) * gw + gx]; }
};

// Patch statistics over windows of (patch + 2*halo) pixels; the halo grows
// with the layer index, mimicking deeper layers' larger receptive fields.
StatsGrid compute_stats(const Image& img, int patch, int halo) {
    StatsGrid grid;
    grid.gw = (img.width + patch - 1) / patch;
    grid.gh = (img.height + patch - 1) / patch;
    grid.cells.resize(static_cast<std::size_t>(grid.gw) * grid.gh);

    const int w = img.width, h = img.height;
    std::vector<double> luma(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* p = img.at(x, y);
            luma[static_cast<std::size_t>(y) * w + x] = luminance(p[0], p[1], p[2]);
        }
    auto lum = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return luma[static_cast<std::size_t>(y) * w + x];
    };

    double g_r = 0, g_g = 0, g_b = 0, g_l = 0, g_grad = 0, g_std = 0;
    for (int gy = 0; gy < grid.gh; ++gy) {
        for (int gx = 0; gx < grid.gw; ++gx) {
            const int x0 = std::max(0, gx * patch - halo);
            const int y0 = std::max(0, gy * patch - halo);
            const int x1 = std::min(w, gx * patch + patch + halo);
            const int y1 = std::min(h, gy * patch + patch + halo);
            double sr = 0, sg = 0, sb = 0, sl = 0, sgrad = 0;
            double hc = 0, hx = 0, hy = 0;
            const int n = (x1 - x0) * (y1 - y0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const std::uint8_t* p = img.at(x, y);
                    sr += p[0];
                    sg += p[1];
                    sb += p[2];
                    const double l = luma[static_cast<std::size_t>(y) * w + x];
                    sl += l;
                    const double dx = 0.5 * (lum(x + 1, y) - lum(x - 1, y));
                    const double dy = 0.5 * (lum(x, y + 1) - lum(x, y - 1));
                    sgrad += std::sqrt(dx * dx + dy * dy);
                    hc += ((x + y) & 1) ? l : -l;
                    hx += (x & 1) ? l : -l;
                    hy += (y & 1) ? l : -l;
                }
            PatchStats& s = grid.at(gx, gy);
            s.mean_r = sr / n;
            s.mean_g = sg / n;
            s.mean_b = sb / n;
            s.mean_luma = sl / n;
            double var = 0;  // two-pass: exact zero on constant patches
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double d = luma[static_cast<std::size_t>(y) * w + x] - s.mean_luma;
                    var += d * d;
                }
            s.std_luma = std::sqrt(var / n);
            s.mean_grad = sgrad / n;
            s.hf_checker = hc / n;
            s.hf_x = hx / n;
            s.hf_y = hy / n;
            g_r += s.mean_r;
            g_g += s.mean_g;
            g_b += s.mean_b;
            g_l += s.mean_luma;
            g_grad += s.mean_grad;
            g_std += s.std_luma;
        }
    }
    const double cells = static_cast<double>(grid.gw) * grid.gh;
    grid.global.mean_r = g_r / cells;
    grid.global.mean_g = g_g / cells;
    grid.global.mean_b = g_b / cells;
    grid.global.mean_luma = g_l / cells;
    grid.global.mean_grad = g_grad / cells;
    grid.global.std_luma = g_std / cells;
    return grid;
}

// Signal channels pass through a quadratic gate: strong content (saturated
// objects) keeps nearly full weight while weak content (background close to
// the global mean) is suppressed below the high-frequency channels, which
// are driven by fine texture and sensor noise. This shapes bi-temporal
// similarity like a foundation-model feature map: confident matches near 1
// for distinctive content, a broad noise-dominated body elsewhere, and deep
// drops where content actually changed.
constexpr double kSignalWeight = 8.0;
constexpr double kHfWeight = 0.25;
constexpr double kBias = 1.0;
constexpr double kGate = 30.0;

inline double gated(double v, double n) {
    const double q = (n / kGate) * (n / kGate);
    const double scale = kSignalWeight * q / (1.0 + q);
    return n > 1e-12 ? scale * v / n : 0.0;
}

}  // namespace

FacetStack SyntheticBackend::extract_facets(const Image& image, int layer, FacetKind kind) const {
    check_layer(layer);
    if (image.width <= 0 || image.height <= 0)
        throw Error(ErrorCode::InvalidArgument, "image is empty");

    const StatsGrid grid = compute_stats(image, kPatch, layer);
    const PatchStats& g = grid.global;

    FacetStack f;
    f.kind = kind;
    f.layer = layer;
    f.heads = kHeads;
    f.grid_h = grid.gh;
    f.grid_w = grid.gw;
    f.channels = kFacetChannels;
    f.data.resize(static_cast<std::size_t>(kHeads) * grid.gh * grid.gw * kFacetChannels);

    for (int gy = 0; gy < grid.gh; ++gy)
        for (int gx = 0; gx < grid.gw; ++gx) {
            const PatchStats& s = grid.at(gx, gy);
            float* h0 = f.at(0, gy, gx);
            float* h1 = f.at(1, gy, gx);

            // Appearance head: globally centered color direction plus one
            // high-frequency channel; the facet kind selects the color view.
            double c0, c1, c2;
            switch (kind) {
                case FacetKind::Key:
                    c0 = s.mean_r - g.mean_r;
                    c1 = s.mean_g - g.mean_g;
                    c2 = s.mean_b - g.mean_b;
                    break;
                case FacetKind::Query:
                    c0 = s.mean_luma - g.mean_luma;
                    c1 = s.mean_r - s.mean_g;
                    c2 = s.mean_g - s.mean_b;
                    break;
                case FacetKind::Value:
                default:
                    c0 = s.mean_r - 128.0;
                    c1 = s.mean_g - 128.0;
                    c2 = s.mean_b - 128.0;
                    break;
            }
            const double cn = std::sqrt(c0 * c0 + c1 * c1 + c2 * c2);
            h0[0] = static_cast<float>(gated(c0, cn));
            h0[1] = static_cast<float>(gated(c1, cn));
            h0[2] = static_cast<float>(gated(c2, cn));
            h0[3] = static_cast<float>(kHfWeight * s.hf_checker * kPatch);
            h0[4] = static_cast<float>(kBias);

            // Mixed luma/structure head: a complementary appearance view so
            // both heads respond to content change, plus one more
            // high-frequency channel.
            const double d0 = s.mean_luma - g.mean_luma;
            const double d1 = (s.mean_r - s.mean_g) - (g.mean_r - g.mean_g);
            const double d2 = 2.0 * (s.mean_grad - g.mean_grad);
            const double dn = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
            h1[0] = static_cast<float>(gated(d0, dn));
            h1[1] = static_cast<float>(gated(d1, dn));
            h1[2] = static_cast<float>(gated(d2, dn));
            h1[3] = static_cast<float>(kHfWeight * s.hf_x * kPatch);
            h1[4] = static_cast<float>(kBias);
        }
    return f;
}

EmbeddingMap SyntheticBackend::extract_embedding(const Image& image, int layer) const {
    check_layer(layer);
    if (image.width <= 0 || image.height <= 0)
        throw Error(ErrorCode::InvalidArgument, "image is empty");

    const StatsGrid grid = compute_stats(image, kPatch, layer);

    EmbeddingMap e;
    e.layer = layer;
    e.grid_h = grid.gh;
    e.grid_w = grid.gw;
    e.channels = kEmbeddingChannels;
    e.data.resize(static_cast<std::size_t>(grid.gh) * grid.gw * kEmbeddingChannels);
    for (int gy = 0; gy < grid.gh; ++gy)
        for (int gx = 0; gx < grid.gw; ++gx) {
            const PatchStats& s = grid.at(gx, gy);
            float* v = e.at(gy, gx);
            v[0] = static_cast<float>(s.mean_r);
            v[1] = static_cast<float>(s.mean_g);
            v[2] = static_cast<float>(s.mean_b);
            v[3] = static_cast<float>(s.std_luma);
            v[4] = static_cast<float>(s.mean_grad);
            v[5] = static_cast<float>(4.0 * kBias);
        }
    return e;
}

std::vector<MaskProposal> SyntheticBackend::propose_masks(const Image& image,
                                                          const ProposerConfig& cfg) const {
    cfg.validate();
    const int w = image.width, h = image.height;
    if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "image is empty");

    // 8-level color quantization: one bit per channel.
    std::vector<std::uint8_t> level(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* p = image.at(x, y);
            level[static_cast<std::size_t>(y) * w + x] =
                static_cast<std::uint8_t>(((p[0] >= 128) << 2) | ((p[1] >= 128) << 1) | (p[2] >= 128));
        }

    // 4-connected components in scan order.
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<MaskProposal> proposals;
    std::vector<std::int32_t> stack;
    for (int sy = 0; sy < h; ++sy)
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t start = static_cast<std::size_t>(sy) * w + sx;
            if (label[start] >= 0) continue;
            const std::uint8_t lev = level[start];
            const std::int32_t id = static_cast<std::int32_t>(proposals.size());
            label[start] = id;
            stack.clear();
            stack.push_back(static_cast<std::int32_t>(start));
            int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
            std::vector<std::int32_t> region;
            while (!stack.empty()) {
                const std::int32_t idx = stack.back();
                stack.pop_back();
                region.push_back(idx);
                const int x = idx % w, y = idx / w;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (label[nidx] >= 0 || level[nidx] != lev) continue;
                    label[nidx] = id;
                    stack.push_back(static_cast<std::int32_t>(nidx));
                }
            }
            MaskProposal p;
            p.width = w;
            p.height = h;
            p.box_x = x0;
            p.box_y = y0;
            p.box_w = x1 - x0 + 1;
            p.box_h = y1 - y0 + 1;
            p.bits.assign(static_cast<std::size_t>(p.box_w) * p.box_h, 0);
            for (std::int32_t idx : region) {
                const int x = idx % w, y = idx / w;
                p.bits[static_cast<std::size_t>(y - y0) * p.box_w + (x - x0)] = 1;
            }
            p.area = static_cast<std::int64_t>(region.size());
            p.predicted_iou = 1.0;
            p.stability = 1.0;
            proposals.push_back(std::move(p));
        }

    // The component proposer scores everything 1.0, but honor the filter
    // contract regardless.
    std::vector<MaskProposal> kept;
    kept.reserve(proposals.size());
    for (MaskProposal& p : proposals)
        if (p.predicted_iou >= cfg.predicted_iou_threshold && p.stability >= cfg.stability_threshold)
            kept.push_back(std::move(p));
    return kept;
}

}  // namespace gescd
