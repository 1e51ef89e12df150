#pragma once

#include <cstdint>

#include "gescd/image.hpp"

namespace gescd {

/// Pixel confusion counts with change as the positive class.
struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

struct MetricRow {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double iou_change = 0.0;
    double iou_nochange = 0.0;
    double miou = 0.0;
    double tc = 0.0;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt);

// Degenerate conventions: an empty prediction against an empty ground truth
// scores 1.0; an empty prediction against a non-empty ground truth scores 0.
double f1(const Confusion& c);
double precision(const Confusion& c);
double recall(const Confusion& c);
double iou(const Confusion& c, bool change_class);
double miou(const Confusion& c);

/// Fills every field of MetricRow except tc.
MetricRow metric_row(const Confusion& c);

/// Intersection over union of two binary masks; 1.0 when both are empty.
double temporal_consistency(const BinaryMask& pred_fwd, const BinaryMask& pred_bwd);

/// Binary cross-entropy with probability clipping at eps = 1e-7.
double bce(double p, int y);

/// Weighted combination of forward and backward losses.
double bitemporal_bce(double loss_fwd, double loss_bwd, double m, double n);

}  // namespace gescd
