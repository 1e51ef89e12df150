#include "gescd/vit_backend.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "vit/nn_ops.hpp"
#include "vit/sam_decoder.hpp"
#include "vit/sam_encoder.hpp"
#include "vit/sam_weights.hpp"

namespace gescd {

namespace vit {

namespace {

std::uint64_t hash_image(const Image& img) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(img.width));
    mix(static_cast<std::uint64_t>(img.height));
    for (std::uint8_t b : img.pixels) mix(b);
    return h;
}

}  // namespace

/// Owns the weights and memoizes the most recent encoder passes so that
/// facets, embeddings, and proposals for the same image share one forward.
/// The cache is guarded by a mutex; results are pure functions of the image,
/// so hits and misses are observationally identical.
class Engine {
public:
    explicit Engine(const std::string& path)
        : weights_(SamWeights::load(path)), encoder_(weights_), decoder_(weights_) {}

    const SamMeta& meta() const { return weights_.meta; }

    struct Pass {
        std::uint64_t key = 0;
        int image_w = 0, image_h = 0;
        EncoderResult enc;
        int facet_layer = -1;
        int facet_select = -1;
        int embedding_layer = -1;
        bool has_neck = false;
    };

    /// Runs (or reuses) an encoder pass that covers the requested captures.
    std::shared_ptr<const Pass> run(const Image& image, int facet_layer, int facet_select,
                                    int embedding_layer, bool need_neck) const {
        const std::uint64_t key = hash_image(image);
        {
            std::lock_guard<std::mutex> lock(mu_);
            for (const auto& p : cache_) {
                if (p->key != key || p->image_w != image.width || p->image_h != image.height)
                    continue;
                const bool facets_ok = facet_layer < 0 || (p->facet_layer == facet_layer &&
                                                           p->facet_select == facet_select);
                const bool emb_ok = embedding_layer < 0 || p->embedding_layer == embedding_layer;
                const bool neck_ok = !need_neck || p->has_neck;
                if (facets_ok && emb_ok && neck_ok) return p;
            }
        }

        EncoderRequest req;
        req.facet_layer = facet_layer;
        req.facet_select = facet_select;
        req.embedding_layer = embedding_layer;
        req.need_neck = need_neck;
        auto pass = std::make_shared<Pass>();
        pass->key = key;
        pass->image_w = image.width;
        pass->image_h = image.height;
        pass->enc = encoder_.forward(encoder_.preprocess(image), req);
        pass->facet_layer = facet_layer;
        pass->facet_select = facet_select;
        pass->embedding_layer = embedding_layer;
        pass->has_neck = need_neck;

        std::lock_guard<std::mutex> lock(mu_);
        if (cache_.size() >= 4) cache_.erase(cache_.begin());
        cache_.push_back(pass);
        return pass;
    }

    const SamDecoder& decoder() const { return decoder_; }

private:
    SamWeights weights_;
    SamEncoder encoder_;
    SamDecoder decoder_;
    mutable std::mutex mu_;
    mutable std::vector<std::shared_ptr<const Pass>> cache_;
};

}  // namespace vit

VitBackend::VitBackend(const std::string& weights_path)
    : engine_(std::make_unique<vit::Engine>(weights_path)) {}

VitBackend::~VitBackend() = default;

int VitBackend::layer_count() const { return engine_->meta().depth; }
int VitBackend::head_count() const { return engine_->meta().num_heads; }

int VitBackend::default_facet_layer() const {
    // Key facets from the intermediate depth; layer 17 for the 32-block model.
    const int d = engine_->meta().depth;
    return std::min(d - 1, (17 * d + 16) / 32);
}

FacetStack VitBackend::extract_facets(const Image& image, int layer, FacetKind kind) const {
    check_layer(layer);
    const int select = kind == FacetKind::Query ? 0 : (kind == FacetKind::Key ? 1 : 2);
    auto pass = engine_->run(image, layer, select, -1, false);

    const vit::Tensor& t = pass->enc.facets;
    FacetStack f;
    f.kind = kind;
    f.layer = layer;
    f.heads = t.dim(0);
    f.grid_h = t.dim(1);
    f.grid_w = t.dim(2);
    f.channels = t.dim(3);
    f.data = t.data;
    return f;
}

EmbeddingMap VitBackend::extract_embedding(const Image& image, int layer) const {
    check_layer(layer);
    auto pass = engine_->run(image, -1, -1, layer, false);

    const vit::Tensor& t = pass->enc.embedding;
    EmbeddingMap e;
    e.layer = layer;
    e.grid_h = t.dim(0);
    e.grid_w = t.dim(1);
    e.channels = t.dim(2);
    e.data = t.data;
    return e;
}

std::vector<MaskProposal> VitBackend::propose_masks(const Image& image,
                                                    const ProposerConfig& cfg) const {
    cfg.validate();
    const vit::SamMeta& meta = engine_->meta();
    auto pass = engine_->run(image, -1, -1, -1, true);
    const vit::Tensor& neck = pass->enc.neck;

    // Point grid in original-image coordinates, mapped into the padded model
    // frame for the prompt encoder.
    const double model_scale =
        static_cast<double>(meta.img_size) / std::max(image.width, image.height);
    const int n = cfg.points_per_side;
    const double offset = 1.0 / (2.0 * n);

    struct Candidate {
        BinaryMask mask;
        std::int64_t area = 0;
        int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;
        double iou = 0, stability = 0;
    };
    std::vector<Candidate> candidates;

    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const double fx = n > 1 ? offset + ix * (1.0 - 2.0 * offset) / (n - 1) : 0.5;
            const double fy = n > 1 ? offset + iy * (1.0 - 2.0 * offset) / (n - 1) : 0.5;
            // Pixel-center shift in the model frame before normalizing.
            const double px = (fx * image.width * model_scale + 0.5) / meta.img_size;
            const double py = (fy * image.height * model_scale + 0.5) / meta.img_size;

            const vit::DecodedMasks dec = engine_->decoder().decode_point(neck, px, py);
            for (std::size_t mi = 0; mi < dec.mask_logits.size(); ++mi) {
                const double iou = dec.iou_predictions[mi];
                if (iou < cfg.predicted_iou_threshold) continue;

                // Stability: area ratio at logit thresholds +-1 around 0.
                const vit::Tensor& logits = dec.mask_logits[mi];
                std::int64_t hi = 0, lo = 0;
                for (float v : logits.data) {
                    hi += v > 1.0f;
                    lo += v > -1.0f;
                }
                const double stability = lo > 0 ? static_cast<double>(hi) / lo : 0.0;
                if (stability < cfg.stability_threshold) continue;

                // Upscale to the model frame, crop the valid region, resize
                // to the original image, and threshold at 0.
                vit::Tensor low({1, logits.dim(0), logits.dim(1)});
                low.data = logits.data;
                const vit::Tensor big =
                    vit::resize_bilinear_chw(low, meta.img_size, meta.img_size);
                const int vw = std::max(1, static_cast<int>(std::lround(image.width * model_scale)));
                const int vh = std::max(1, static_cast<int>(std::lround(image.height * model_scale)));
                vit::Tensor cropped({1, vh, vw});
                for (int y = 0; y < vh; ++y)
                    for (int x = 0; x < vw; ++x)
                        cropped.ptr()[static_cast<std::size_t>(y) * vw + x] =
                            big.ptr()[static_cast<std::size_t>(y) * meta.img_size + x];
                vit::Tensor full = vit::resize_bilinear_chw(cropped, image.height, image.width);

                Candidate c;
                c.mask = BinaryMask(image.width, image.height);
                c.bx0 = image.width;
                c.by0 = image.height;
                c.bx1 = -1;
                c.by1 = -1;
                for (int y = 0; y < image.height; ++y)
                    for (int x = 0; x < image.width; ++x)
                        if (full.ptr()[static_cast<std::size_t>(y) * image.width + x] > 0.0f) {
                            c.mask.at(x, y) = 1;
                            ++c.area;
                            c.bx0 = std::min(c.bx0, x);
                            c.by0 = std::min(c.by0, y);
                            c.bx1 = std::max(c.bx1, x);
                            c.by1 = std::max(c.by1, y);
                        }
                if (c.area == 0) continue;
                c.iou = iou;
                c.stability = stability;
                candidates.push_back(std::move(c));
            }
        }

    // Greedy box NMS ordered by predicted quality (stable on ties).
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].iou > candidates[b].iou;
    });
    auto box_iou = [](const Candidate& a, const Candidate& b) {
        const int x0 = std::max(a.bx0, b.bx0), y0 = std::max(a.by0, b.by0);
        const int x1 = std::min(a.bx1, b.bx1), y1 = std::min(a.by1, b.by1);
        const std::int64_t iw = std::max(0, x1 - x0 + 1), ih = std::max(0, y1 - y0 + 1);
        const std::int64_t inter = iw * ih;
        const std::int64_t aa = static_cast<std::int64_t>(a.bx1 - a.bx0 + 1) * (a.by1 - a.by0 + 1);
        const std::int64_t bb = static_cast<std::int64_t>(b.bx1 - b.bx0 + 1) * (b.by1 - b.by0 + 1);
        return static_cast<double>(inter) / static_cast<double>(aa + bb - inter);
    };
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool suppressed = false;
        for (std::size_t k : kept)
            if (box_iou(candidates[idx], candidates[k]) > cfg.nms_threshold) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(idx);
    }

    std::vector<MaskProposal> out;
    out.reserve(kept.size());
    for (std::size_t idx : kept)
        out.push_back(proposal_from_mask(candidates[idx].mask, candidates[idx].iou,
                                         candidates[idx].stability));
    return out;
}

}  // namespace gescd
