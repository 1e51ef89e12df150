#pragma once

#include <vector>

#include "vit/sam_weights.hpp"

namespace gescd::vit {

/// One decoded point prompt: multimask logits plus predicted quality.
struct DecodedMasks {
    int low_res = 0;                   // low-res mask side (4x the token grid)
    std::vector<Tensor> mask_logits;   // each [low_res, low_res]
    std::vector<float> iou_predictions;
};

/// Point-prompt encoder and mask decoder operating on the encoder's neck
/// output. Only point prompts are supported (the automatic proposer needs
/// nothing else).
class SamDecoder {
public:
    explicit SamDecoder(const SamWeights& weights);

    /// Decodes one positive point (normalized [0,1] coordinates in the model
    /// frame). Returns the multimask outputs (tokens 1..n-1).
    DecodedMasks decode_point(const Tensor& neck, double px, double py) const;

    const SamMeta& meta() const { return w_.meta; }

private:
    Tensor positional_grid(int gh, int gw) const;  // [gh*gw, dim]
    Tensor encode_point(double px, double py) const;

    // attention over projected q/k/v; prefix selects the weight names.
    Tensor attention(const std::string& prefix, const Tensor& q, const Tensor& k, const Tensor& v,
                     int heads) const;
    Tensor mlp3(const std::string& prefix, const Tensor& x, bool relu_final) const;

    const SamWeights& w_;
};

}  // namespace gescd::vit
