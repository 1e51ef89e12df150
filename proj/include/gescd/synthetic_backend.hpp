#pragma once

#include "gescd/backend.hpp"

namespace gescd {

/// Weight-free backend for desk-scale runs and tests. Facets are per-head
/// stacks of local patch statistics (mean color, gradient magnitude,
/// coordinate encodings) on a fixed grid; proposals are connected components
/// of an 8-level color quantization with predicted_iou = stability = 1.0.
/// Fully deterministic: identical images yield bit-identical outputs.
class SyntheticBackend : public Backend {
public:
    static constexpr int kPatch = 4;        // token grid cell size in pixels
    static constexpr int kLayers = 4;       // layer index modulates smoothing
    static constexpr int kHeads = 2;
    static constexpr int kFacetChannels = 5;
    static constexpr int kEmbeddingChannels = 6;

    std::string name() const override { return "synthetic"; }
    int layer_count() const override { return kLayers; }
    int head_count() const override { return kHeads; }
    int default_facet_layer() const override { return kLayers / 2; }

    FacetStack extract_facets(const Image& image, int layer, FacetKind kind) const override;
    EmbeddingMap extract_embedding(const Image& image, int layer) const override;
    std::vector<MaskProposal> propose_masks(const Image& image,
                                            const ProposerConfig& cfg) const override;
};

}  // namespace gescd
