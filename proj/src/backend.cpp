#include "gescd/backend.hpp"

#include <algorithm>
#include <cmath>

namespace gescd {

const char* facet_kind_name(FacetKind kind) {
    switch (kind) {
        case FacetKind::Query: return "query";
        case FacetKind::Key: return "key";
        case FacetKind::Value: return "value";
    }
    return "key";
}

FacetKind facet_kind_from_name(const std::string& name) {
    if (name == "query") return FacetKind::Query;
    if (name == "key") return FacetKind::Key;
    if (name == "value") return FacetKind::Value;
    throw Error(ErrorCode::InvalidArgument, "unknown facet kind: " + name);
}

void ProposerConfig::validate() const {
    if (points_per_side < 1)
        throw Error(ErrorCode::InvalidArgument, "points_per_side must be >= 1");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(nms_threshold) || !in01(predicted_iou_threshold) || !in01(stability_threshold))
        throw Error(ErrorCode::InvalidArgument, "proposer thresholds must lie in [0,1]");
}

MaskProposal proposal_from_mask(const BinaryMask& mask, double predicted_iou, double stability) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    std::int64_t area = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                ++area;
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (area == 0) throw Error(ErrorCode::InvalidArgument, "proposal mask must be non-empty");

    MaskProposal p;
    p.width = mask.width;
    p.height = mask.height;
    p.box_x = x0;
    p.box_y = y0;
    p.box_w = x1 - x0 + 1;
    p.box_h = y1 - y0 + 1;
    p.bits.assign(static_cast<std::size_t>(p.box_w) * p.box_h, 0);
    for (int y = 0; y < p.box_h; ++y)
        for (int x = 0; x < p.box_w; ++x)
            p.bits[static_cast<std::size_t>(y) * p.box_w + x] = mask.at(x0 + x, y0 + y);
    p.area = area;
    p.predicted_iou = predicted_iou;
    p.stability = stability;
    return p;
}

MaskEmbedding mask_embedding(const EmbeddingMap& emb, const BinaryMask& mask) {
    if (emb.grid_w <= 0 || emb.grid_h <= 0 || emb.channels <= 0)
        throw Error(ErrorCode::InvalidArgument, "embedding map is empty");
    if (mask.width <= 0 || mask.height <= 0)
        throw Error(ErrorCode::InvalidArgument, "mask is empty");

    // Nearest-neighbor downscale of the mask onto the token grid, using the
    // same half-pixel convention as the image resizers.
    const double sx = static_cast<double>(mask.width) / emb.grid_w;
    const double sy = static_cast<double>(mask.height) / emb.grid_h;
    std::vector<double> sum(static_cast<std::size_t>(emb.channels), 0.0);
    std::int64_t cells = 0;
    for (int gy = 0; gy < emb.grid_h; ++gy) {
        int my = static_cast<int>(std::lround((gy + 0.5) * sy - 0.5));
        my = std::clamp(my, 0, mask.height - 1);
        for (int gx = 0; gx < emb.grid_w; ++gx) {
            int mx = static_cast<int>(std::lround((gx + 0.5) * sx - 0.5));
            mx = std::clamp(mx, 0, mask.width - 1);
            if (!mask.at(mx, my)) continue;
            const float* v = emb.at(gy, gx);
            for (int c = 0; c < emb.channels; ++c) sum[c] += v[c];
            ++cells;
        }
    }
    if (cells == 0)
        throw Error(ErrorCode::EmptyMask, "mask is empty on the embedding grid");

    MaskEmbedding out;
    out.vector.resize(emb.channels);
    for (int c = 0; c < emb.channels; ++c) out.vector[c] = sum[c] / cells;
    out.source_mask_area = cells;
    return out;
}

int Backend::embedding_layer(const std::string& named) const {
    if (named == "initial") return 0;
    if (named == "intermediate") return layer_count() / 2;
    if (named == "last") return layer_count() - 1;
    throw Error(ErrorCode::InvalidArgument, "unknown embedding layer name: " + named);
}

void Backend::check_layer(int layer) const {
    if (layer < 0 || layer >= layer_count())
        throw Error(ErrorCode::Range, "layer " + std::to_string(layer) + " out of range for " +
                                          name() + " (0.." + std::to_string(layer_count() - 1) +
                                          ")");
}

}  // namespace gescd
