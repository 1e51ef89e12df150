#pragma once

#include "gescd/image.hpp"
#include "vit/sam_weights.hpp"

namespace gescd::vit {

/// What to intercept during an encoder pass. Layer -1 disables a capture.
struct EncoderRequest {
    int facet_layer = -1;
    int facet_select = 1;  // 0 = query, 1 = key, 2 = value
    int embedding_layer = -1;
    bool need_neck = false;
};

struct EncoderResult {
    int grid_h = 0;
    int grid_w = 0;
    // [heads, grid_h, grid_w, head_dim] when requested.
    Tensor facets;
    // [grid_h, grid_w, embed_dim] block output when requested.
    Tensor embedding;
    // [neck_dim, grid_h, grid_w] when need_neck.
    Tensor neck;
};

/// ViT image encoder with windowed attention, decomposed relative position
/// bias, and per-block interception of qkv facets and block outputs.
class SamEncoder {
public:
    explicit SamEncoder(const SamWeights& weights);

    /// Scales the longest side to the model input size, normalizes, and
    /// zero-pads to a square. Returns [3, S, S].
    Tensor preprocess(const Image& image) const;

    EncoderResult forward(const Tensor& preprocessed, const EncoderRequest& req) const;

    const SamMeta& meta() const { return w_.meta; }

private:
    const SamWeights& w_;
};

}  // namespace gescd::vit
