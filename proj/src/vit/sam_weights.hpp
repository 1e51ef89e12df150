#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "vit/tensor.hpp"

namespace gescd::vit {

/// Model geometry, read from the weight file's metadata block.
struct SamMeta {
    int img_size = 1024;
    int patch_size = 16;
    int embed_dim = 1280;
    int depth = 32;
    int num_heads = 16;
    double mlp_ratio = 4.0;
    int window_size = 14;
    std::vector<int> global_blocks = {7, 15, 23, 31};
    int neck_dim = 256;
    std::array<double, 3> pixel_mean = {123.675, 116.28, 103.53};
    std::array<double, 3> pixel_std = {58.395, 57.12, 57.375};

    // Mask decoder geometry.
    int transformer_dim = 256;
    int decoder_heads = 8;
    int decoder_downsample = 2;
    int decoder_mlp_dim = 2048;
    int num_mask_tokens = 4;  // 1 + num_multimask_outputs
    int iou_head_hidden = 256;

    bool is_global_block(int i) const {
        for (int g : global_blocks)
            if (g == i) return true;
        return false;
    }
};

/// Named-tensor weight store ("GSW1" container). The exporter script under
/// tools/ produces this file from an upstream checkpoint.
class SamWeights {
public:
    SamMeta meta;

    const Tensor& tensor(const std::string& name) const;
    bool has(const std::string& name) const { return tensors_.count(name) > 0; }
    void put(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }

    static SamWeights load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::map<std::string, Tensor> tensors_;
};

}  // namespace gescd::vit
