#pragma once

#include <memory>
#include <string>

#include "gescd/backend.hpp"
#include "gescd/config.hpp"
#include "gescd/matching.hpp"
#include "gescd/pseudomask.hpp"
#include "gescd/registration.hpp"

namespace gescd {

enum class RegistrationMode { None, Homography };

/// Resolved pipeline settings (config keys -> typed values).
struct PipelineOptions {
    std::string backend_name = "synthetic";
    std::string weights_path;
    int facet_layer = -1;  // -1: backend default
    FacetKind facet_kind = FacetKind::Key;
    int input_size = 512;
    ProposerConfig proposer;
    ThresholdParams threshold;
    MatchParams match;
    RegistrationMode registration = RegistrationMode::None;
    RansacConfig ransac;
    bool fallback_pseudo = false;

    static PipelineOptions from_config(const Config& cfg);
};

/// Creates the configured backend. Throws Error{BackendUnavailable} when the
/// adapter weights are missing.
std::unique_ptr<Backend> make_backend(const PipelineOptions& opts);

struct DetectResult {
    ChangeMask change;
    PseudoMask pseudo;
    SimilarityMap similarity;      // raw head-averaged map
    SimilarityMap normalized;      // MAD-normalized map
    bool registration_applied = false;
    bool registration_fell_back = false;
    Transform transform;  // identity unless homography registration succeeded
};

/// Detection pipeline bound to one backend instance. Stateless per call;
/// safe to invoke concurrently from multiple threads.
class Pipeline {
public:
    explicit Pipeline(const Config& cfg);
    Pipeline(PipelineOptions opts, std::unique_ptr<Backend> backend);

    const PipelineOptions& options() const { return opts_; }
    const Backend& backend() const { return *backend_; }

    /// Full change detection for one registered (or identity-mode) pair.
    /// Output lives in img0's frame. Commutative under argument swap in
    /// identity-registration mode.
    DetectResult detect(const Image& img0, const Image& img1) const;

private:
    PipelineOptions opts_;
    std::unique_ptr<Backend> backend_;
};

}  // namespace gescd
