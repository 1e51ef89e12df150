#include "gescd/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gescd {

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_size(gt))
        throw Error(ErrorCode::InvalidArgument, "prediction and ground truth differ in resolution");
    Confusion c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double f1(const Confusion& c) {
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    if (denom == 0.0) return 1.0;  // both prediction and ground truth empty
    return 2.0 * c.tp / denom;
}

double precision(const Confusion& c) {
    if (c.tp + c.fp == 0) return c.fn == 0 ? 1.0 : 0.0;
    return static_cast<double>(c.tp) / (c.tp + c.fp);
}

double recall(const Confusion& c) {
    if (c.tp + c.fn == 0) return c.fp == 0 ? 1.0 : 0.0;
    return static_cast<double>(c.tp) / (c.tp + c.fn);
}

double iou(const Confusion& c, bool change_class) {
    if (change_class) {
        const std::int64_t denom = c.tp + c.fp + c.fn;
        if (denom == 0) return 1.0;
        return static_cast<double>(c.tp) / denom;
    }
    const std::int64_t denom = c.tn + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(c.tn) / denom;
}

double miou(const Confusion& c) { return 0.5 * (iou(c, true) + iou(c, false)); }

MetricRow metric_row(const Confusion& c) {
    MetricRow r;
    r.f1 = f1(c);
    r.precision = precision(c);
    r.recall = recall(c);
    r.iou_change = iou(c, true);
    r.iou_nochange = iou(c, false);
    r.miou = 0.5 * (r.iou_change + r.iou_nochange);
    return r;
}

double temporal_consistency(const BinaryMask& pred_fwd, const BinaryMask& pred_bwd) {
    if (!pred_fwd.same_size(pred_bwd))
        throw Error(ErrorCode::InvalidArgument, "temporal consistency needs equal resolutions");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred_fwd.data.size(); ++i) {
        const bool a = pred_fwd.data[i] != 0;
        const bool b = pred_bwd.data[i] != 0;
        inter += a && b;
        uni += a || b;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / uni;
}

double bce(double p, int y) {
    constexpr double eps = 1e-7;
    p = std::clamp(p, eps, 1.0 - eps);
    return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

double bitemporal_bce(double loss_fwd, double loss_bwd, double m, double n) {
    if (m < 0.0 || n < 0.0)
        throw Error(ErrorCode::InvalidArgument, "bitemporal weights must be non-negative");
    return m * loss_fwd + n * loss_bwd;
}

}  // namespace gescd
