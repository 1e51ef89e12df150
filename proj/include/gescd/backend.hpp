#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gescd/image.hpp"

namespace gescd {

enum class FacetKind { Query, Key, Value };

const char* facet_kind_name(FacetKind kind);
FacetKind facet_kind_from_name(const std::string& name);

/// Per-head feature tensor intercepted at one encoder layer for one image.
/// Layout: head-major, then row-major over the token grid, then channels.
struct FacetStack {
    FacetKind kind = FacetKind::Key;
    int layer = 0;
    int heads = 0;
    int grid_h = 0;
    int grid_w = 0;
    int channels = 0;
    std::vector<float> data;  // heads * grid_h * grid_w * channels

    const float* at(int head, int gy, int gx) const {
        const std::size_t idx =
            ((static_cast<std::size_t>(head) * grid_h + gy) * grid_w + gx) * channels;
        return data.data() + idx;
    }
    float* at(int head, int gy, int gx) {
        const std::size_t idx =
            ((static_cast<std::size_t>(head) * grid_h + gy) * grid_w + gx) * channels;
        return data.data() + idx;
    }

    bool same_shape(const FacetStack& o) const {
        return kind == o.kind && layer == o.layer && heads == o.heads && grid_h == o.grid_h &&
               grid_w == o.grid_w && channels == o.channels;
    }
};

/// Dense per-token image embedding from one encoder layer.
struct EmbeddingMap {
    int layer = 0;
    int grid_h = 0;
    int grid_w = 0;
    int channels = 0;
    std::vector<float> data;  // grid_h * grid_w * channels

    const float* at(int gy, int gx) const {
        return data.data() + (static_cast<std::size_t>(gy) * grid_w + gx) * channels;
    }
    float* at(int gy, int gx) {
        return data.data() + (static_cast<std::size_t>(gy) * grid_w + gx) * channels;
    }
};

/// One class-agnostic binary segment at input-image resolution. The pixels
/// are stored packed inside the bounding box to keep many proposals cheap.
struct MaskProposal {
    int width = 0;   // full-resolution mask width
    int height = 0;  // full-resolution mask height
    int box_x = 0;
    int box_y = 0;
    int box_w = 0;
    int box_h = 0;
    std::vector<std::uint8_t> bits;  // box_w * box_h, values {0,1}
    std::int64_t area = 0;
    double predicted_iou = 1.0;
    double stability = 1.0;

    bool test(int x, int y) const {
        if (x < box_x || y < box_y || x >= box_x + box_w || y >= box_y + box_h) return false;
        return bits[static_cast<std::size_t>(y - box_y) * box_w + (x - box_x)] != 0;
    }

    BinaryMask to_mask() const {
        BinaryMask m(width, height);
        for (int y = 0; y < box_h; ++y)
            for (int x = 0; x < box_w; ++x)
                if (bits[static_cast<std::size_t>(y) * box_w + x])
                    m.at(box_x + x, box_y + y) = 1;
        return m;
    }
};

/// Builds a MaskProposal from a full-resolution binary mask.
MaskProposal proposal_from_mask(const BinaryMask& mask, double predicted_iou, double stability);

struct ProposerConfig {
    int points_per_side = 32;
    double nms_threshold = 0.7;
    double predicted_iou_threshold = 0.7;
    double stability_threshold = 0.7;

    void validate() const;
};

/// Single-vector representation of an image embedding under a mask.
struct MaskEmbedding {
    std::vector<double> vector;
    std::int64_t source_mask_area = 0;
};

/// Mean of the embedding over token cells covered by the mask. The mask is
/// brought onto the token grid by nearest-neighbor downscale; a mask that
/// covers no cell after downscaling raises Error{EmptyMask}.
MaskEmbedding mask_embedding(const EmbeddingMap& emb, const BinaryMask& mask);

/// Feature and proposal provider. Instances are immutable after
/// construction; all operations are const and safe to call concurrently.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string name() const = 0;
    virtual int layer_count() const = 0;
    virtual int head_count() const = 0;

    /// Layer the pseudo-mask stage should use when the config does not
    /// override it.
    virtual int default_facet_layer() const = 0;

    /// Maps a named embedding depth ("initial"|"intermediate"|"last") onto a
    /// concrete layer index.
    int embedding_layer(const std::string& named) const;

    virtual FacetStack extract_facets(const Image& image, int layer, FacetKind kind) const = 0;
    virtual EmbeddingMap extract_embedding(const Image& image, int layer) const = 0;
    virtual std::vector<MaskProposal> propose_masks(const Image& image,
                                                    const ProposerConfig& cfg) const = 0;

protected:
    void check_layer(int layer) const;
};

}  // namespace gescd
