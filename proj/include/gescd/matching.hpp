#pragma once

#include <string>
#include <vector>

#include "gescd/backend.hpp"
#include "gescd/pseudomask.hpp"

namespace gescd {

struct MatchParams {
    double alpha_t = 0.65;
    double confidence = 0.88;
    std::string ssm_layer = "last";

    void validate() const;
};

/// Provenance of one retained proposal inside a ChangeMask.
struct RetainedProposal {
    int source = 0;  // 0 = t0 proposals, 1 = t1 proposals
    int index = 0;   // index in the source proposal list
    double alpha = 0.0;
    double cosine = 0.0;
};

/// Final object-level change prediction plus the provenance of every
/// retained proposal.
struct ChangeMask {
    BinaryMask mask;
    std::vector<RetainedProposal> retained;
};

/// Fraction of the proposal covered by the pseudo-mask:
/// |proposal AND pseudo| / |proposal|.
double intersection_ratio(const MaskProposal& proposal, const PseudoMask& pseudo);

/// Keeps exactly the proposals with alpha strictly greater than alpha_t,
/// preserving order. Out parameter (optional) receives each kept alpha.
std::vector<MaskProposal> gim_filter(const std::vector<MaskProposal>& proposals,
                                     const PseudoMask& pseudo, const MatchParams& p,
                                     std::vector<double>* kept_alphas = nullptr,
                                     std::vector<int>* kept_indices = nullptr);

/// Cosine similarity between the two mask embeddings of one proposal mask.
/// Zero-norm embeddings compare as 0.
double mask_cosine(const EmbeddingMap& emb0, const EmbeddingMap& emb1, const MaskProposal& proposal);

/// Keeps proposals whose cross-time mask-embedding cosine is strictly below
/// the change confidence score. Proposals empty on the embedding grid are
/// dropped.
std::vector<MaskProposal> ssm_filter(const std::vector<MaskProposal>& retained,
                                     const EmbeddingMap& emb0, const EmbeddingMap& emb1,
                                     const MatchParams& p,
                                     std::vector<double>* kept_cosines = nullptr,
                                     std::vector<int>* kept_indices = nullptr);

/// Pixelwise union of retained proposals from both temporal directions.
ChangeMask compose_change_mask(const std::vector<MaskProposal>& kept_t0,
                               const std::vector<MaskProposal>& kept_t1, int width, int height);

}  // namespace gescd
