#include "gescd/pipeline.hpp"

#include "gescd/synthetic_backend.hpp"
#include "gescd/vit_backend.hpp"

namespace gescd {

PipelineOptions PipelineOptions::from_config(const Config& cfg) {
    PipelineOptions o;
    o.backend_name = cfg.get("backend");
    o.weights_path = cfg.get("weights_path");
    o.facet_layer = cfg.get_int("facet_layer");
    o.facet_kind = facet_kind_from_name(cfg.get("facet_kind"));
    o.input_size = cfg.get_int("input_size");
    if (o.input_size < 8)
        throw Error(ErrorCode::InvalidArgument, "input_size must be >= 8");

    o.proposer.points_per_side = cfg.get_int("proposer.points_per_side");
    o.proposer.nms_threshold = cfg.get_double("proposer.nms_threshold");
    o.proposer.predicted_iou_threshold = cfg.get_double("proposer.predicted_iou_threshold");
    o.proposer.stability_threshold = cfg.get_double("proposer.stability_threshold");
    o.proposer.validate();

    const std::string reg = cfg.get("register");
    if (reg == "none")
        o.registration = RegistrationMode::None;
    else if (reg == "homography")
        o.registration = RegistrationMode::Homography;
    else
        throw Error(ErrorCode::InvalidArgument, "register must be none or homography, got " + reg);
    o.ransac.max_iterations = cfg.get_int("ransac.max_iterations");
    o.ransac.inlier_threshold = cfg.get_double("ransac.inlier_threshold");
    o.ransac.min_inliers = cfg.get_int("ransac.min_inliers");
    o.ransac.random_seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    o.ransac.validate();

    o.threshold.b_right = cfg.get_double("threshold.b_right");
    o.threshold.s_right = cfg.get_double("threshold.s_right");
    o.threshold.b_left = cfg.get_double("threshold.b_left");
    o.threshold.s_left = cfg.get_double("threshold.s_left");
    o.threshold.c = cfg.get_double("threshold.c");
    o.threshold.skew_band = cfg.get_double("threshold.skew_band");
    o.threshold.z_value = cfg.get_double("threshold.z_value");
    o.threshold.validate();

    o.match.alpha_t = cfg.get_double("match.alpha_t");
    o.match.confidence = cfg.get_double("match.confidence");
    o.match.ssm_layer = cfg.get("match.ssm_layer");
    o.match.validate();
    o.fallback_pseudo = cfg.get_bool("match.fallback_pseudo");
    return o;
}

std::unique_ptr<Backend> make_backend(const PipelineOptions& opts) {
    if (opts.backend_name == "synthetic") return std::make_unique<SyntheticBackend>();
    if (opts.backend_name == "vith-adapter") return std::make_unique<VitBackend>(opts.weights_path);
    throw Error(ErrorCode::InvalidArgument, "unknown backend: " + opts.backend_name);
}

Pipeline::Pipeline(const Config& cfg)
    : opts_(PipelineOptions::from_config(cfg)), backend_(make_backend(opts_)) {}

Pipeline::Pipeline(PipelineOptions opts, std::unique_ptr<Backend> backend)
    : opts_(std::move(opts)), backend_(std::move(backend)) {
    if (!backend_) throw Error(ErrorCode::InvalidArgument, "pipeline needs a backend");
}

DetectResult Pipeline::detect(const Image& img0, const Image& img1) const {
    if (!img0.same_size(img1))
        throw Error(ErrorCode::InvalidArgument, "bi-temporal images must share a resolution");

    DetectResult r;
    const Image* second = &img1;
    Image warped;
    if (opts_.registration == RegistrationMode::Homography) {
        try {
            r.transform = estimate_transform(img0, img1, opts_.ransac);
            warped = warp(img1, r.transform);
            second = &warped;
            r.registration_applied = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RegistrationFailure) throw;
            r.registration_fell_back = true;  // identity fallback
        }
    }

    const int layer =
        opts_.facet_layer >= 0 ? opts_.facet_layer : backend_->default_facet_layer();
    PseudomaskResult pm = generate_pseudomask_full(*backend_, img0, *second, layer,
                                                   opts_.facet_kind, opts_.threshold);

    const std::vector<MaskProposal> proposals0 = backend_->propose_masks(img0, opts_.proposer);
    const std::vector<MaskProposal> proposals1 = backend_->propose_masks(*second, opts_.proposer);

    std::vector<double> alphas0, alphas1;
    std::vector<int> gim_idx0, gim_idx1;
    const std::vector<MaskProposal> gim0 =
        gim_filter(proposals0, pm.pseudo, opts_.match, &alphas0, &gim_idx0);
    const std::vector<MaskProposal> gim1 =
        gim_filter(proposals1, pm.pseudo, opts_.match, &alphas1, &gim_idx1);

    const int ssm_layer = backend_->embedding_layer(opts_.match.ssm_layer);
    const EmbeddingMap emb0 = backend_->extract_embedding(img0, ssm_layer);
    const EmbeddingMap emb1 = backend_->extract_embedding(*second, ssm_layer);

    std::vector<double> cos0, cos1;
    std::vector<int> ssm_idx0, ssm_idx1;
    const std::vector<MaskProposal> kept0 =
        ssm_filter(gim0, emb0, emb1, opts_.match, &cos0, &ssm_idx0);
    const std::vector<MaskProposal> kept1 =
        ssm_filter(gim1, emb0, emb1, opts_.match, &cos1, &ssm_idx1);

    r.change = compose_change_mask(kept0, kept1, img0.width, img0.height);
    for (std::size_t i = 0; i < kept0.size(); ++i)
        r.change.retained.push_back(
            {0, gim_idx0[ssm_idx0[i]], alphas0[ssm_idx0[i]], cos0[i]});
    for (std::size_t i = 0; i < kept1.size(); ++i)
        r.change.retained.push_back(
            {1, gim_idx1[ssm_idx1[i]], alphas1[ssm_idx1[i]], cos1[i]});

    if (opts_.fallback_pseudo && r.change.retained.empty())
        for (std::size_t i = 0; i < r.change.mask.data.size(); ++i)
            r.change.mask.data[i] |= pm.pseudo.mask.data[i];

    r.pseudo = std::move(pm.pseudo);
    r.similarity = std::move(pm.raw);
    r.normalized = std::move(pm.normalized);
    return r;
}

}  // namespace gescd
