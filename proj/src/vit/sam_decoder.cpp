#include "vit/sam_decoder.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "vit/nn_ops.hpp"

namespace gescd::vit {

namespace {
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

constexpr double kTwoPi = 6.283185307179586;

void add_rows(Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

Tensor slice_rows(const Tensor& x, int row0, int rows) {
    const int c = x.dim(1);
    Tensor out({rows, c});
    std::copy(x.ptr() + static_cast<std::size_t>(row0) * c,
              x.ptr() + static_cast<std::size_t>(row0 + rows) * c, out.ptr());
    return out;
}

}  // namespace

SamDecoder::SamDecoder(const SamWeights& weights) : w_(weights) {
    const SamMeta& m = w_.meta;
    const int td = m.transformer_dim;
    require_shape(w_.tensor("prompt.pe_gauss"), {2, td / 2}, "prompt.pe_gauss");
    require_shape(w_.tensor("prompt.point_embed.1"), {td}, "prompt.point_embed.1");
    require_shape(w_.tensor("prompt.not_a_point"), {td}, "prompt.not_a_point");
    require_shape(w_.tensor("prompt.no_mask"), {td}, "prompt.no_mask");
    require_shape(w_.tensor("dec.iou_token"), {td}, "dec.iou_token");
    require_shape(w_.tensor("dec.mask_tokens"), {m.num_mask_tokens, td}, "dec.mask_tokens");
}

Tensor SamDecoder::positional_grid(int gh, int gw) const {
    const Tensor& gauss = w_.tensor("prompt.pe_gauss");
    const int half = gauss.dim(1);
    Tensor out({gh * gw, 2 * half});
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x) {
            const double cy = 2.0 * ((y + 0.5) / gh) - 1.0;
            const double cx = 2.0 * ((x + 0.5) / gw) - 1.0;
            float* dst = out.ptr() + static_cast<std::size_t>(y * gw + x) * 2 * half;
            for (int c = 0; c < half; ++c) {
                const double p = kTwoPi * (cx * gauss.ptr()[c] + cy * gauss.ptr()[half + c]);
                dst[c] = static_cast<float>(std::sin(p));
                dst[half + c] = static_cast<float>(std::cos(p));
            }
        }
    return out;
}

Tensor SamDecoder::encode_point(double px, double py) const {
    const Tensor& gauss = w_.tensor("prompt.pe_gauss");
    const int half = gauss.dim(1);
    Tensor out({2, 2 * half});  // [point, padding point]

    auto encode = [&](double x, double y, float* dst) {
        const double cx = 2.0 * x - 1.0;
        const double cy = 2.0 * y - 1.0;
        for (int c = 0; c < half; ++c) {
            const double p = kTwoPi * (cx * gauss.ptr()[c] + cy * gauss.ptr()[half + c]);
            dst[c] = static_cast<float>(std::sin(p));
            dst[half + c] = static_cast<float>(std::cos(p));
        }
    };
    encode(px, py, out.ptr());
    const Tensor& pos_embed = w_.tensor("prompt.point_embed.1");
    for (int c = 0; c < 2 * half; ++c) out.ptr()[c] += pos_embed.ptr()[c];

    // Padding point: label -1 replaces the encoding with not_a_point.
    const Tensor& nap = w_.tensor("prompt.not_a_point");
    for (int c = 0; c < 2 * half; ++c) out.ptr()[2 * half + c] = nap.ptr()[c];
    return out;
}

Tensor SamDecoder::attention(const std::string& prefix, const Tensor& q, const Tensor& k,
                             const Tensor& v, int heads) const {
    const Tensor& wq = w_.tensor(prefix + ".q.w");
    const Tensor& wk = w_.tensor(prefix + ".k.w");
    const Tensor& wv = w_.tensor(prefix + ".v.w");
    const int inner = wq.dim(0);
    const int head_dim = inner / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

    Tensor qp = linear(q, wq, w_.tensor(prefix + ".q.b"));
    Tensor kp = linear(k, wk, w_.tensor(prefix + ".k.b"));
    Tensor vp = linear(v, wv, w_.tensor(prefix + ".v.b"));
    const int nq = qp.dim(0), nk = kp.dim(0);

    Tensor out({nq, inner});
    std::vector<float> attn(static_cast<std::size_t>(nq) * nk);
    std::vector<float> qh(static_cast<std::size_t>(nq) * head_dim);
    std::vector<float> kh(static_cast<std::size_t>(nk) * head_dim);
    std::vector<float> vh(static_cast<std::size_t>(nk) * head_dim);
    std::vector<float> oh(static_cast<std::size_t>(nq) * head_dim);
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < nq; ++i)
            std::copy(qp.ptr() + static_cast<std::size_t>(i) * inner + h * head_dim,
                      qp.ptr() + static_cast<std::size_t>(i) * inner + (h + 1) * head_dim,
                      qh.data() + static_cast<std::size_t>(i) * head_dim);
        for (int i = 0; i < nk; ++i) {
            std::copy(kp.ptr() + static_cast<std::size_t>(i) * inner + h * head_dim,
                      kp.ptr() + static_cast<std::size_t>(i) * inner + (h + 1) * head_dim,
                      kh.data() + static_cast<std::size_t>(i) * head_dim);
            std::copy(vp.ptr() + static_cast<std::size_t>(i) * inner + h * head_dim,
                      vp.ptr() + static_cast<std::size_t>(i) * inner + (h + 1) * head_dim,
                      vh.data() + static_cast<std::size_t>(i) * head_dim);
        }
        MapConst qm(qh.data(), nq, head_dim), km(kh.data(), nk, head_dim),
            vm(vh.data(), nk, head_dim);
        MapMat am(attn.data(), nq, nk);
        am.noalias() = (qm * scale) * km.transpose();
        softmax_rows(attn.data(), nq, nk);
        MapMat om(oh.data(), nq, head_dim);
        om.noalias() = am * vm;
        for (int i = 0; i < nq; ++i)
            std::copy(oh.data() + static_cast<std::size_t>(i) * head_dim,
                      oh.data() + static_cast<std::size_t>(i + 1) * head_dim,
                      out.ptr() + static_cast<std::size_t>(i) * inner + h * head_dim);
    }
    return linear(out, w_.tensor(prefix + ".out.w"), w_.tensor(prefix + ".out.b"));
}

Tensor SamDecoder::mlp3(const std::string& prefix, const Tensor& x, bool relu_final) const {
    Tensor h1 = linear(x, w_.tensor(prefix + ".0.w"), w_.tensor(prefix + ".0.b"));
    relu(h1);
    Tensor h2 = linear(h1, w_.tensor(prefix + ".1.w"), w_.tensor(prefix + ".1.b"));
    relu(h2);
    Tensor h3 = linear(h2, w_.tensor(prefix + ".2.w"), w_.tensor(prefix + ".2.b"));
    if (relu_final) relu(h3);
    return h3;
}

DecodedMasks SamDecoder::decode_point(const Tensor& neck, double px, double py) const {
    const SamMeta& m = w_.meta;
    const int td = m.transformer_dim;
    const int gh = neck.dim(1), gw = neck.dim(2);
    const int hw = gh * gw;

    // Tokens: [iou, mask_tokens..., point, padding point].
    const int n_fixed = 1 + m.num_mask_tokens;
    Tensor sparse = encode_point(px, py);
    Tensor tokens({n_fixed + 2, td});
    std::copy(w_.tensor("dec.iou_token").ptr(), w_.tensor("dec.iou_token").ptr() + td,
              tokens.ptr());
    std::copy(w_.tensor("dec.mask_tokens").ptr(),
              w_.tensor("dec.mask_tokens").ptr() + static_cast<std::size_t>(m.num_mask_tokens) * td,
              tokens.ptr() + td);
    std::copy(sparse.ptr(), sparse.ptr() + 2 * td,
              tokens.ptr() + static_cast<std::size_t>(n_fixed) * td);

    // Image side: neck + dense no-mask embedding, flattened to [hw, td].
    Tensor src({hw, td});
    const Tensor& no_mask = w_.tensor("prompt.no_mask");
    for (int i = 0; i < hw; ++i)
        for (int c = 0; c < td; ++c)
            src.ptr()[static_cast<std::size_t>(i) * td + c] =
                neck.ptr()[static_cast<std::size_t>(c) * hw + i] + no_mask.ptr()[c];
    const Tensor pos = positional_grid(gh, gw);  // [hw, td]

    // Two-way transformer.
    Tensor queries = tokens;
    Tensor keys = src;
    for (int layer = 0; layer < 2; ++layer) {
        const std::string lp = "dec.layer" + std::to_string(layer);
        // Self attention over tokens. The first layer skips the PE on q/k
        // and replaces the queries instead of adding a residual.
        if (layer == 0) {
            queries = attention(lp + ".self", queries, queries, queries, m.decoder_heads);
        } else {
            Tensor q = queries;
            add_rows(q, tokens);
            Tensor attn_out = attention(lp + ".self", q, q, queries, m.decoder_heads);
            add_rows(queries, attn_out);
        }
        layernorm_lastdim(queries, w_.tensor(lp + ".norm1.w"), w_.tensor(lp + ".norm1.b"), 1e-5f);

        // Cross attention, tokens -> image.
        {
            Tensor q = queries;
            add_rows(q, tokens);
            Tensor k = keys;
            add_rows(k, pos);
            Tensor attn_out = attention(lp + ".t2i", q, k, keys, m.decoder_heads);
            add_rows(queries, attn_out);
            layernorm_lastdim(queries, w_.tensor(lp + ".norm2.w"), w_.tensor(lp + ".norm2.b"),
                              1e-5f);
        }

        // Token MLP (2 layers with ReLU).
        {
            Tensor h = linear(queries, w_.tensor(lp + ".mlp.0.w"), w_.tensor(lp + ".mlp.0.b"));
            relu(h);
            Tensor o = linear(h, w_.tensor(lp + ".mlp.1.w"), w_.tensor(lp + ".mlp.1.b"));
            add_rows(queries, o);
            layernorm_lastdim(queries, w_.tensor(lp + ".norm3.w"), w_.tensor(lp + ".norm3.b"),
                              1e-5f);
        }

        // Cross attention, image -> tokens.
        {
            Tensor q = keys;
            add_rows(q, pos);
            Tensor k = queries;
            add_rows(k, tokens);
            Tensor attn_out = attention(lp + ".i2t", q, k, queries, m.decoder_heads);
            add_rows(keys, attn_out);
            layernorm_lastdim(keys, w_.tensor(lp + ".norm4.w"), w_.tensor(lp + ".norm4.b"), 1e-5f);
        }
    }

    // Final token -> image attention.
    {
        Tensor q = queries;
        add_rows(q, tokens);
        Tensor k = keys;
        add_rows(k, pos);
        Tensor attn_out = attention("dec.final_t2i", q, k, keys, m.decoder_heads);
        add_rows(queries, attn_out);
        layernorm_lastdim(queries, w_.tensor("dec.norm_final.w"), w_.tensor("dec.norm_final.b"),
                          1e-5f);
    }

    // Upscale the image features 4x and apply the mask hypernetworks.
    Tensor chw({td, gh, gw});
    for (int i = 0; i < hw; ++i)
        for (int c = 0; c < td; ++c)
            chw.ptr()[static_cast<std::size_t>(c) * hw + i] =
                keys.ptr()[static_cast<std::size_t>(i) * td + c];
    Tensor up1 = conv_transpose2x2(chw, w_.tensor("dec.upscale.conv1.w"),
                                   w_.tensor("dec.upscale.conv1.b"));
    layernorm_channels(up1, w_.tensor("dec.upscale.ln.w"), w_.tensor("dec.upscale.ln.b"));
    gelu(up1);
    Tensor up2 = conv_transpose2x2(up1, w_.tensor("dec.upscale.conv2.w"),
                                   w_.tensor("dec.upscale.conv2.b"));
    gelu(up2);
    const int uh = up2.dim(1), uw = up2.dim(2);
    const int uc = up2.dim(0);

    DecodedMasks out;
    out.low_res = uh;
    const Tensor iou_tok = slice_rows(queries, 0, 1);
    Tensor iou_pred = mlp3("dec.iou_head", iou_tok, false);  // [1, num_mask_tokens]

    // Multimask outputs: tokens 1..num_mask_tokens-1 (token 0 is the
    // single-mask output and is skipped by the automatic proposer).
    for (int t = 1; t < m.num_mask_tokens; ++t) {
        const Tensor tok = slice_rows(queries, 1 + t, 1);
        const Tensor hyper =
            mlp3("dec.hyper" + std::to_string(t), tok, false);  // [1, uc]
        Tensor logits({uh, uw});
        MapConst um(up2.ptr(), uc, uh * uw);
        MapConst hm(hyper.ptr(), 1, uc);
        MapMat lm(logits.ptr(), 1, uh * uw);
        lm.noalias() = hm * um;
        out.mask_logits.push_back(std::move(logits));
        out.iou_predictions.push_back(iou_pred.ptr()[t]);
    }
    return out;
}

}  // namespace gescd::vit
