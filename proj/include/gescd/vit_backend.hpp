#pragma once

#include <memory>
#include <string>

#include "gescd/backend.hpp"

namespace gescd {

namespace vit {
class Engine;
}

/// Foundation-model adapter backend. Runs a ViT image encoder (windowed
/// attention, relative position bias) plus a point-prompted mask decoder
/// from a converted weight file; see tools/export_sam_weights.py for the
/// converter. Construction fails with Error{BackendUnavailable} when the
/// weight file is missing or malformed.
class VitBackend : public Backend {
public:
    explicit VitBackend(const std::string& weights_path);
    ~VitBackend() override;

    std::string name() const override { return "vith-adapter"; }
    int layer_count() const override;
    int head_count() const override;
    int default_facet_layer() const override;

    FacetStack extract_facets(const Image& image, int layer, FacetKind kind) const override;
    EmbeddingMap extract_embedding(const Image& image, int layer) const override;
    std::vector<MaskProposal> propose_masks(const Image& image,
                                            const ProposerConfig& cfg) const override;

private:
    std::unique_ptr<vit::Engine> engine_;
};

}  // namespace gescd
