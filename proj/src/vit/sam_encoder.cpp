#include "vit/sam_encoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "vit/nn_ops.hpp"

namespace gescd::vit {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

std::string bname(int i, const char* suffix) {
    return "enc.b" + std::to_string(i) + "." + suffix;
}

/// Relative position table rows for a (q_size, k_size) attention span,
/// following the decomposed relative-position scheme.
Tensor gather_rel_pos(const Tensor& table, int q_size, int k_size) {
    const int max_rel_dist = 2 * std::max(q_size, k_size) - 1;
    Tensor resized = resize_rows_linear(table, max_rel_dist);
    const int c = resized.dim(1);
    // coords[q,k] = q * max(k/q,1) - k * max(q/k,1) + (k-1) * max(q/k,1)
    const double q_ratio = std::max(static_cast<double>(k_size) / q_size, 1.0);
    const double k_ratio = std::max(static_cast<double>(q_size) / k_size, 1.0);
    Tensor out({q_size, k_size, c});
    for (int q = 0; q < q_size; ++q)
        for (int k = 0; k < k_size; ++k) {
            const int rel = static_cast<int>(q * q_ratio - k * k_ratio + (k_size - 1) * k_ratio);
            const float* src = resized.ptr() + static_cast<std::size_t>(rel) * c;
            float* dst = out.ptr() + (static_cast<std::size_t>(q) * k_size + k) * c;
            std::copy(src, src + c, dst);
        }
    return out;
}

}  // namespace

SamEncoder::SamEncoder(const SamWeights& weights) : w_(weights) {
    const SamMeta& m = w_.meta;
    // Validate the tensors the forward pass will touch; a missing or
    // misshapen tensor should fail at backend construction, not mid-run.
    require_shape(w_.tensor("enc.patch_embed.w"),
                  {m.embed_dim, 3, m.patch_size, m.patch_size}, "enc.patch_embed.w");
    require_shape(w_.tensor("enc.patch_embed.b"), {m.embed_dim}, "enc.patch_embed.b");
    const int grid = m.img_size / m.patch_size;
    require_shape(w_.tensor("enc.pos_embed"), {grid, grid, m.embed_dim}, "enc.pos_embed");
    const int mlp_dim = static_cast<int>(m.embed_dim * m.mlp_ratio);
    for (int i = 0; i < m.depth; ++i) {
        require_shape(w_.tensor(bname(i, "ln1.w")), {m.embed_dim}, bname(i, "ln1.w"));
        require_shape(w_.tensor(bname(i, "ln1.b")), {m.embed_dim}, bname(i, "ln1.b"));
        require_shape(w_.tensor(bname(i, "qkv.w")), {3 * m.embed_dim, m.embed_dim},
                      bname(i, "qkv.w"));
        require_shape(w_.tensor(bname(i, "qkv.b")), {3 * m.embed_dim}, bname(i, "qkv.b"));
        require_shape(w_.tensor(bname(i, "proj.w")), {m.embed_dim, m.embed_dim},
                      bname(i, "proj.w"));
        require_shape(w_.tensor(bname(i, "proj.b")), {m.embed_dim}, bname(i, "proj.b"));
        require_shape(w_.tensor(bname(i, "ln2.w")), {m.embed_dim}, bname(i, "ln2.w"));
        require_shape(w_.tensor(bname(i, "ln2.b")), {m.embed_dim}, bname(i, "ln2.b"));
        require_shape(w_.tensor(bname(i, "mlp.fc1.w")), {mlp_dim, m.embed_dim},
                      bname(i, "mlp.fc1.w"));
        require_shape(w_.tensor(bname(i, "mlp.fc2.w")), {m.embed_dim, mlp_dim},
                      bname(i, "mlp.fc2.w"));
        const int span = m.is_global_block(i) ? grid : m.window_size;
        const int head_dim = m.embed_dim / m.num_heads;
        require_shape(w_.tensor(bname(i, "rel_h")), {2 * span - 1, head_dim}, bname(i, "rel_h"));
        require_shape(w_.tensor(bname(i, "rel_w")), {2 * span - 1, head_dim}, bname(i, "rel_w"));
    }
    require_shape(w_.tensor("neck.conv1.w"), {m.neck_dim, m.embed_dim, 1, 1}, "neck.conv1.w");
    require_shape(w_.tensor("neck.conv2.w"), {m.neck_dim, m.neck_dim, 3, 3}, "neck.conv2.w");
}

Tensor SamEncoder::preprocess(const Image& image) const {
    const SamMeta& m = w_.meta;
    const int target = m.img_size;
    const double scale = static_cast<double>(target) / std::max(image.width, image.height);
    const int nw = std::max(1, static_cast<int>(std::lround(image.width * scale)));
    const int nh = std::max(1, static_cast<int>(std::lround(image.height * scale)));
    const Image resized = resize_bilinear(image, nw, nh);

    Tensor out({3, target, target});  // zero padded bottom/right
    for (int c = 0; c < 3; ++c) {
        const double mean = m.pixel_mean[c], stdv = m.pixel_std[c];
        float* dst = out.ptr() + static_cast<std::size_t>(c) * target * target;
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x)
                dst[static_cast<std::size_t>(y) * target + x] =
                    static_cast<float>((resized.at(x, y)[c] - mean) / stdv);
    }
    return out;
}

EncoderResult SamEncoder::forward(const Tensor& preprocessed, const EncoderRequest& req) const {
    const SamMeta& m = w_.meta;
    const int head_dim = m.embed_dim / m.num_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

    Tensor x = patch_embed(preprocessed, w_.tensor("enc.patch_embed.w"),
                           w_.tensor("enc.patch_embed.b"), m.patch_size);
    const int gh = x.dim(0), gw = x.dim(1);
    EncoderResult result;
    result.grid_h = gh;
    result.grid_w = gw;

    {
        const Tensor& pos = w_.tensor("enc.pos_embed");
        Tensor posr = pos;
        if (pos.dim(0) != gh || pos.dim(1) != gw) {
            Tensor chw({m.embed_dim, pos.dim(0), pos.dim(1)});
            for (int y = 0; y < pos.dim(0); ++y)
                for (int xx = 0; xx < pos.dim(1); ++xx)
                    for (int c = 0; c < m.embed_dim; ++c)
                        chw.ptr()[(static_cast<std::size_t>(c) * pos.dim(0) + y) * pos.dim(1) +
                                  xx] =
                            pos.ptr()[(static_cast<std::size_t>(y) * pos.dim(1) + xx) *
                                          m.embed_dim +
                                      c];
            Tensor r = resize_bilinear_chw(chw, gh, gw);
            posr = Tensor({gh, gw, m.embed_dim});
            for (int y = 0; y < gh; ++y)
                for (int xx = 0; xx < gw; ++xx)
                    for (int c = 0; c < m.embed_dim; ++c)
                        posr.ptr()[(static_cast<std::size_t>(y) * gw + xx) * m.embed_dim + c] =
                            r.ptr()[(static_cast<std::size_t>(c) * gh + y) * gw + xx];
        }
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += posr.data[i];
    }

    const int tokens = gh * gw;
    for (int blk = 0; blk < m.depth; ++blk) {
        // Attention: shortcut + proj(attn(LN1(x))).
        Tensor normed = x;
        layernorm_lastdim(normed, w_.tensor(bname(blk, "ln1.w")), w_.tensor(bname(blk, "ln1.b")));

        Tensor qkv = linear(normed, w_.tensor(bname(blk, "qkv.w")), w_.tensor(bname(blk, "qkv.b")));
        // qkv: [tokens, 3*embed_dim], token t channel layout: [3][heads][head_dim].

        if (blk == req.facet_layer) {
            result.facets = Tensor({m.num_heads, gh, gw, head_dim});
            const int sel = req.facet_select;
            for (int t = 0; t < tokens; ++t)
                for (int h = 0; h < m.num_heads; ++h) {
                    const float* src = qkv.ptr() + static_cast<std::size_t>(t) * 3 * m.embed_dim +
                                       (static_cast<std::size_t>(sel) * m.num_heads + h) * head_dim;
                    float* dst = result.facets.ptr() +
                                 ((static_cast<std::size_t>(h) * gh + t / gw) * gw + t % gw) *
                                     head_dim;
                    std::copy(src, src + head_dim, dst);
                }
        }

        const bool global = m.is_global_block(blk);
        const int win = global ? std::max(gh, gw) : m.window_size;
        const int ph = (win - gh % win) % win;  // pad to a window multiple
        const int pw = (win - gw % win) % win;
        const int hp = gh + ph, wp = gw + pw;
        const int wins_y = hp / win, wins_x = wp / win;
        const int wt = win * win;  // tokens per window

        // Padded per-window qkv; padding rows take the qkv bias (zero input
        // through the linear layer), matching padding before attention.
        const Tensor& qkv_bias = w_.tensor(bname(blk, "qkv.b"));
        Tensor attn_out({gh, gw, m.embed_dim});

        const Tensor rel_h = gather_rel_pos(w_.tensor(bname(blk, "rel_h")), win, win);
        const Tensor rel_w = gather_rel_pos(w_.tensor(bname(blk, "rel_w")), win, win);

        std::vector<float> q(static_cast<std::size_t>(wt) * head_dim);
        std::vector<float> k(q.size()), v(q.size());
        std::vector<float> attn(static_cast<std::size_t>(wt) * wt);
        std::vector<float> out_head(static_cast<std::size_t>(wt) * head_dim);
        std::vector<float> merged(static_cast<std::size_t>(wt) * m.embed_dim);

        for (int wy = 0; wy < wins_y; ++wy)
            for (int wx = 0; wx < wins_x; ++wx) {
                for (int h = 0; h < m.num_heads; ++h) {
                    // Gather this window's q/k/v for head h.
                    for (int ty = 0; ty < win; ++ty)
                        for (int tx = 0; tx < win; ++tx) {
                            const int gy = wy * win + ty, gx = wx * win + tx;
                            const int widx = ty * win + tx;
                            float* qd = q.data() + static_cast<std::size_t>(widx) * head_dim;
                            float* kd = k.data() + static_cast<std::size_t>(widx) * head_dim;
                            float* vd = v.data() + static_cast<std::size_t>(widx) * head_dim;
                            if (gy < gh && gx < gw) {
                                const float* base =
                                    qkv.ptr() +
                                    static_cast<std::size_t>(gy * gw + gx) * 3 * m.embed_dim;
                                const float* qs = base + static_cast<std::size_t>(h) * head_dim;
                                const float* ks =
                                    base + (static_cast<std::size_t>(m.num_heads) + h) * head_dim;
                                const float* vs =
                                    base +
                                    (static_cast<std::size_t>(2) * m.num_heads + h) * head_dim;
                                std::copy(qs, qs + head_dim, qd);
                                std::copy(ks, ks + head_dim, kd);
                                std::copy(vs, vs + head_dim, vd);
                            } else {
                                const float* qb = qkv_bias.ptr() + static_cast<std::size_t>(h) * head_dim;
                                const float* kb = qkv_bias.ptr() +
                                                  (static_cast<std::size_t>(m.num_heads) + h) * head_dim;
                                const float* vb =
                                    qkv_bias.ptr() +
                                    (static_cast<std::size_t>(2) * m.num_heads + h) * head_dim;
                                std::copy(qb, qb + head_dim, qd);
                                std::copy(kb, kb + head_dim, kd);
                                std::copy(vb, vb + head_dim, vd);
                            }
                        }

                    MapConst qm(q.data(), wt, head_dim);
                    MapConst km(k.data(), wt, head_dim);
                    MapConst vm(v.data(), wt, head_dim);
                    MapMat am(attn.data(), wt, wt);
                    am.noalias() = (qm * scale) * km.transpose();

                    // Decomposed relative position bias.
                    for (int qy = 0; qy < win; ++qy)
                        for (int qx = 0; qx < win; ++qx) {
                            const float* qvec =
                                q.data() + static_cast<std::size_t>(qy * win + qx) * head_dim;
                            float* arow = attn.data() +
                                          static_cast<std::size_t>(qy * win + qx) * wt;
                            for (int ky = 0; ky < win; ++ky) {
                                const float* rh = rel_h.ptr() +
                                                  (static_cast<std::size_t>(qy) * win + ky) *
                                                      head_dim;
                                double bias_h = 0;
                                for (int c = 0; c < head_dim; ++c) bias_h += qvec[c] * rh[c];
                                for (int kx = 0; kx < win; ++kx) {
                                    const float* rw = rel_w.ptr() +
                                                      (static_cast<std::size_t>(qx) * win + kx) *
                                                          head_dim;
                                    double bias_w = 0;
                                    for (int c = 0; c < head_dim; ++c) bias_w += qvec[c] * rw[c];
                                    arow[ky * win + kx] += static_cast<float>(bias_h + bias_w);
                                }
                            }
                        }

                    softmax_rows(attn.data(), wt, wt);
                    MapMat om(out_head.data(), wt, head_dim);
                    om.noalias() = am * vm;

                    for (int t = 0; t < wt; ++t)
                        std::copy(out_head.data() + static_cast<std::size_t>(t) * head_dim,
                                  out_head.data() + static_cast<std::size_t>(t + 1) * head_dim,
                                  merged.data() + static_cast<std::size_t>(t) * m.embed_dim +
                                      static_cast<std::size_t>(h) * head_dim);
                }
                // Scatter unpadded tokens back to the grid.
                for (int ty = 0; ty < win; ++ty)
                    for (int tx = 0; tx < win; ++tx) {
                        const int gy = wy * win + ty, gx = wx * win + tx;
                        if (gy >= gh || gx >= gw) continue;
                        std::copy(merged.data() +
                                      static_cast<std::size_t>(ty * win + tx) * m.embed_dim,
                                  merged.data() +
                                      static_cast<std::size_t>(ty * win + tx + 1) * m.embed_dim,
                                  attn_out.ptr() +
                                      static_cast<std::size_t>(gy * gw + gx) * m.embed_dim);
                    }
            }

        Tensor projected =
            linear(attn_out, w_.tensor(bname(blk, "proj.w")), w_.tensor(bname(blk, "proj.b")));
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += projected.data[i];

        // MLP: x += fc2(gelu(fc1(LN2(x)))).
        Tensor mlp_in = x;
        layernorm_lastdim(mlp_in, w_.tensor(bname(blk, "ln2.w")), w_.tensor(bname(blk, "ln2.b")));
        Tensor hidden =
            linear(mlp_in, w_.tensor(bname(blk, "mlp.fc1.w")), w_.tensor(bname(blk, "mlp.fc1.b")));
        gelu(hidden);
        Tensor mlp_out =
            linear(hidden, w_.tensor(bname(blk, "mlp.fc2.w")), w_.tensor(bname(blk, "mlp.fc2.b")));
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += mlp_out.data[i];

        if (blk == req.embedding_layer) {
            result.embedding = x;
            result.embedding.shape = {gh, gw, m.embed_dim};
        }
    }

    if (req.need_neck) {
        // [gh, gw, D] -> [D, gh, gw], then 1x1 conv, LN2d, 3x3 conv, LN2d.
        Tensor chw({m.embed_dim, gh, gw});
        for (int y = 0; y < gh; ++y)
            for (int xx = 0; xx < gw; ++xx)
                for (int c = 0; c < m.embed_dim; ++c)
                    chw.ptr()[(static_cast<std::size_t>(c) * gh + y) * gw + xx] =
                        x.ptr()[(static_cast<std::size_t>(y) * gw + xx) * m.embed_dim + c];
        Tensor n1 = conv1x1(chw, w_.tensor("neck.conv1.w"));
        layernorm_channels(n1, w_.tensor("neck.ln1.w"), w_.tensor("neck.ln1.b"));
        Tensor n2 = conv3x3(n1, w_.tensor("neck.conv2.w"));
        layernorm_channels(n2, w_.tensor("neck.ln2.w"), w_.tensor("neck.ln2.b"));
        result.neck = std::move(n2);
    }
    return result;
}

}  // namespace gescd::vit
