#include "gescd/matching.hpp"

#include <cmath>

namespace gescd {

void MatchParams::validate() const {
    if (alpha_t <= 0.0 || alpha_t > 1.0)
        throw Error(ErrorCode::InvalidArgument, "match.alpha_t must lie in (0,1]");
    if (confidence < -1.0 || confidence > 1.0)
        throw Error(ErrorCode::InvalidArgument, "match.confidence must lie in [-1,1]");
}

double intersection_ratio(const MaskProposal& proposal, const PseudoMask& pseudo) {
    if (proposal.width != pseudo.mask.width || proposal.height != pseudo.mask.height)
        throw Error(ErrorCode::InvalidArgument, "proposal and pseudo-mask differ in resolution");
    if (proposal.area <= 0)
        throw Error(ErrorCode::InvalidArgument, "proposal has zero area");

    std::int64_t inter = 0;
    for (int y = 0; y < proposal.box_h; ++y)
        for (int x = 0; x < proposal.box_w; ++x) {
            if (!proposal.bits[static_cast<std::size_t>(y) * proposal.box_w + x]) continue;
            if (pseudo.mask.at(proposal.box_x + x, proposal.box_y + y)) ++inter;
        }
    return static_cast<double>(inter) / static_cast<double>(proposal.area);
}

std::vector<MaskProposal> gim_filter(const std::vector<MaskProposal>& proposals,
                                     const PseudoMask& pseudo, const MatchParams& p,
                                     std::vector<double>* kept_alphas,
                                     std::vector<int>* kept_indices) {
    p.validate();
    std::vector<MaskProposal> kept;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        const double alpha = intersection_ratio(proposals[i], pseudo);
        if (alpha > p.alpha_t) {
            kept.push_back(proposals[i]);
            if (kept_alphas) kept_alphas->push_back(alpha);
            if (kept_indices) kept_indices->push_back(static_cast<int>(i));
        }
    }
    return kept;
}

double mask_cosine(const EmbeddingMap& emb0, const EmbeddingMap& emb1,
                   const MaskProposal& proposal) {
    const BinaryMask mask = proposal.to_mask();
    const MaskEmbedding m0 = mask_embedding(emb0, mask);  // throws EmptyMask when unverifiable
    const MaskEmbedding m1 = mask_embedding(emb1, mask);
    double dot = 0, n0 = 0, n1 = 0;
    for (std::size_t c = 0; c < m0.vector.size(); ++c) {
        dot += m0.vector[c] * m1.vector[c];
        n0 += m0.vector[c] * m0.vector[c];
        n1 += m1.vector[c] * m1.vector[c];
    }
    if (n0 <= 0.0 || n1 <= 0.0) return 0.0;
    return dot / std::sqrt(n0 * n1);
}

std::vector<MaskProposal> ssm_filter(const std::vector<MaskProposal>& retained,
                                     const EmbeddingMap& emb0, const EmbeddingMap& emb1,
                                     const MatchParams& p, std::vector<double>* kept_cosines,
                                     std::vector<int>* kept_indices) {
    p.validate();
    if (emb0.channels != emb1.channels || emb0.grid_w != emb1.grid_w || emb0.grid_h != emb1.grid_h)
        throw Error(ErrorCode::InvalidArgument, "embedding maps differ in shape");

    std::vector<MaskProposal> kept;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        double cosine;
        try {
            cosine = mask_cosine(emb0, emb1, retained[i]);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::EmptyMask) continue;  // unverifiable: drop
            throw;
        }
        if (cosine < p.confidence) {
            kept.push_back(retained[i]);
            if (kept_cosines) kept_cosines->push_back(cosine);
            if (kept_indices) kept_indices->push_back(static_cast<int>(i));
        }
    }
    return kept;
}

ChangeMask compose_change_mask(const std::vector<MaskProposal>& kept_t0,
                               const std::vector<MaskProposal>& kept_t1, int width, int height) {
    ChangeMask out;
    out.mask = BinaryMask(width, height);
    auto blit = [&](const std::vector<MaskProposal>& list) {
        for (const MaskProposal& p : list) {
            if (p.width != width || p.height != height)
                throw Error(ErrorCode::InvalidArgument, "proposal resolution mismatch in union");
            for (int y = 0; y < p.box_h; ++y)
                for (int x = 0; x < p.box_w; ++x)
                    if (p.bits[static_cast<std::size_t>(y) * p.box_w + x])
                        out.mask.at(p.box_x + x, p.box_y + y) = 1;
        }
    };
    blit(kept_t0);
    blit(kept_t1);
    return out;
}

}  // namespace gescd
