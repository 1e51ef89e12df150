#include "gescd/bench.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "gescd/png_io.hpp"
#include "gescd/registration.hpp"

namespace gescd {

GtSelect gt_select_from_name(const std::string& name) {
    if (name == "fwd") return GtSelect::Fwd;
    if (name == "bwd") return GtSelect::Bwd;
    if (name == "inter") return GtSelect::Inter;
    throw Error(ErrorCode::InvalidArgument, "gt selector must be fwd, bwd, or inter; got " + name);
}

AverageMode average_mode_from_name(const std::string& name) {
    if (name == "macro") return AverageMode::Macro;
    if (name == "micro") return AverageMode::Micro;
    throw Error(ErrorCode::InvalidArgument, "average must be macro or micro; got " + name);
}

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "md" || name == "markdown") return ReportFormat::Markdown;
    throw Error(ErrorCode::InvalidArgument, "report format must be json, csv, or md; got " + name);
}

namespace {

std::string gt_path_for(const PairRecord& rec, GtSelect sel) {
    switch (sel) {
        case GtSelect::Fwd: return rec.gt_fwd;
        case GtSelect::Bwd:
            if (!rec.gt_bwd)
                throw Error(ErrorCode::InvalidArgument,
                            "pair " + rec.id + " has no backward ground-truth mask");
            return *rec.gt_bwd;
        case GtSelect::Inter:
            if (!rec.gt_intersection)
                throw Error(ErrorCode::InvalidArgument,
                            "pair " + rec.id + " has no intersection ground-truth mask");
            return *rec.gt_intersection;
    }
    throw Error(ErrorCode::Internal, "unreachable gt selector");
}

struct PairOutcome {
    bool ok = false;
    std::string id;
    MetricRow fwd, bwd;          // macro rows
    Confusion conf_fwd, conf_bwd;  // micro accumulation
    double tc = 0.0;
    std::int64_t tc_inter = 0, tc_union = 0;
};

PairOutcome score_pair_masks(const std::string& id, const BinaryMask& pred_fwd,
                             const BinaryMask& pred_bwd, const BinaryMask& gt) {
    PairOutcome o;
    o.id = id;
    o.conf_fwd = confusion(pred_fwd, gt);
    o.conf_bwd = confusion(pred_bwd, gt);
    o.fwd = metric_row(o.conf_fwd);
    o.bwd = metric_row(o.conf_bwd);
    o.tc = temporal_consistency(pred_fwd, pred_bwd);
    for (std::size_t i = 0; i < pred_fwd.data.size(); ++i) {
        const bool a = pred_fwd.data[i] != 0, b = pred_bwd.data[i] != 0;
        o.tc_inter += a && b;
        o.tc_union += a || b;
    }
    o.ok = true;
    return o;
}

DatasetResult aggregate(const DatasetManifest& manifest, std::vector<PairOutcome>& outcomes,
                        const EvalOptions& opts) {
    DatasetResult r;
    r.name = manifest.name;

    Confusion micro_fwd, micro_bwd;
    std::int64_t micro_inter = 0, micro_union = 0;
    MetricRow sum_fwd, sum_bwd;
    double sum_tc = 0.0;

    for (PairOutcome& o : outcomes) {
        if (!o.ok) {
            r.skipped.push_back(o.id);
            continue;
        }
        ++r.pairs_scored;
        micro_fwd += o.conf_fwd;
        micro_bwd += o.conf_bwd;
        micro_inter += o.tc_inter;
        micro_union += o.tc_union;
        sum_fwd.f1 += o.fwd.f1;
        sum_fwd.precision += o.fwd.precision;
        sum_fwd.recall += o.fwd.recall;
        sum_fwd.iou_change += o.fwd.iou_change;
        sum_fwd.iou_nochange += o.fwd.iou_nochange;
        sum_fwd.miou += o.fwd.miou;
        sum_bwd.f1 += o.bwd.f1;
        sum_bwd.precision += o.bwd.precision;
        sum_bwd.recall += o.bwd.recall;
        sum_bwd.iou_change += o.bwd.iou_change;
        sum_bwd.iou_nochange += o.bwd.iou_nochange;
        sum_bwd.miou += o.bwd.miou;
        sum_tc += o.tc;
    }

    if (r.pairs_scored == 0) {
        r.failed = true;
        r.failure = "no pair could be scored";
        return r;
    }

    if (opts.average == AverageMode::Macro) {
        const double n = r.pairs_scored;
        auto div = [n](MetricRow row) {
            row.f1 /= n;
            row.precision /= n;
            row.recall /= n;
            row.iou_change /= n;
            row.iou_nochange /= n;
            row.miou /= n;
            return row;
        };
        r.fwd = div(sum_fwd);
        r.bwd = div(sum_bwd);
        r.tc = sum_tc / n;
    } else {
        r.fwd = metric_row(micro_fwd);
        r.bwd = metric_row(micro_bwd);
        r.tc = micro_union == 0 ? 1.0 : static_cast<double>(micro_inter) / micro_union;
    }
    r.fwd.tc = r.tc;
    r.bwd.tc = r.tc;
    return r;
}

}  // namespace

DatasetResult run_eval(const DatasetManifest& manifest, const Pipeline& pipeline,
                       const EvalOptions& opts) {
    std::vector<PairOutcome> outcomes(manifest.records.size());

    const int threads = std::max(1, opts.threads);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= manifest.records.size()) break;
            const PairRecord& rec = manifest.records[i];
            try {
                const Image img0 = load_pair_image(rec, false, manifest);
                const Image img1 = load_pair_image(rec, true, manifest);
                const BinaryMask gt = load_gt_mask(gt_path_for(rec, opts.gt), manifest);

                const DetectResult fwd = pipeline.detect(img0, img1);
                const DetectResult bwd = pipeline.detect(img1, img0);
                BinaryMask pred_bwd = bwd.change.mask;
                if (bwd.registration_applied)
                    // bwd output lives in img1's frame; its transform maps
                    // t0 -> t1, so the inverse brings the mask back to t0.
                    pred_bwd = warp_mask(pred_bwd, bwd.transform.inverse());

                outcomes[i] = score_pair_masks(rec.id, fwd.change.mask, pred_bwd, gt);
            } catch (const std::exception& e) {
                outcomes[i].ok = false;
                outcomes[i].id = rec.id;
                std::fprintf(stderr, "warning: pair %s skipped: %s\n", rec.id.c_str(), e.what());
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return aggregate(manifest, outcomes, opts);
}

DatasetResult score_external(const DatasetManifest& manifest, const std::string& predictions_dir,
                             const EvalOptions& opts) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(predictions_dir))
        throw Error(ErrorCode::Io, "predictions directory does not exist: " + predictions_dir);

    std::vector<std::string> missing;
    for (const PairRecord& rec : manifest.records) {
        for (const char* suffix : {"_fwd.png", "_bwd.png"})
            if (!fs::exists(fs::path(predictions_dir) / (rec.id + suffix)))
                missing.push_back(rec.id + suffix);
    }
    if (!missing.empty()) {
        std::string msg = "missing prediction files:";
        for (std::size_t i = 0; i < missing.size() && i < 16; ++i) msg += " " + missing[i];
        if (missing.size() > 16) msg += " (+" + std::to_string(missing.size() - 16) + " more)";
        throw Error(ErrorCode::Io, msg);
    }

    std::vector<PairOutcome> outcomes(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const PairRecord& rec = manifest.records[i];
        try {
            const BinaryMask gt = load_gt_mask(gt_path_for(rec, opts.gt), manifest);
            const BinaryMask pf = resize_mask_nearest(
                read_mask((fs::path(predictions_dir) / (rec.id + "_fwd.png")).string()),
                manifest.resolution_w, manifest.resolution_h);
            const BinaryMask pb = resize_mask_nearest(
                read_mask((fs::path(predictions_dir) / (rec.id + "_bwd.png")).string()),
                manifest.resolution_w, manifest.resolution_h);
            outcomes[i] = score_pair_masks(rec.id, pf, pb, gt);
        } catch (const std::exception& e) {
            outcomes[i].ok = false;
            outcomes[i].id = rec.id;
            std::fprintf(stderr, "warning: pair %s skipped: %s\n", rec.id.c_str(), e.what());
        }
    }
    return aggregate(manifest, outcomes, opts);
}

EvalReport report_from_results(std::vector<DatasetResult> results, const EvalOptions& opts) {
    EvalReport report;
    report.per_dataset = std::move(results);
    report.config = opts.config_snapshot;

    int cells = 0, datasets = 0;
    MetricRow& avg = report.average;
    for (const DatasetResult& d : report.per_dataset) {
        if (d.failed) continue;
        for (const MetricRow* row : {&d.fwd, &d.bwd}) {
            avg.f1 += row->f1;
            avg.precision += row->precision;
            avg.recall += row->recall;
            avg.iou_change += row->iou_change;
            avg.iou_nochange += row->iou_nochange;
            avg.miou += row->miou;
            ++cells;
        }
        avg.tc += d.tc;
        ++datasets;
    }
    if (cells > 0) {
        avg.f1 /= cells;
        avg.precision /= cells;
        avg.recall /= cells;
        avg.iou_change /= cells;
        avg.iou_nochange /= cells;
        avg.miou /= cells;
        avg.tc /= datasets;
    }
    return report;
}

EvalReport run_protocol(const std::vector<DatasetManifest>& manifests, const Pipeline& pipeline,
                        const EvalOptions& opts) {
    if (manifests.empty())
        throw Error(ErrorCode::InvalidArgument, "protocol needs at least one dataset");
    std::vector<DatasetResult> results;
    results.reserve(manifests.size());
    for (const DatasetManifest& m : manifests) {
        try {
            results.push_back(run_eval(m, pipeline, opts));
        } catch (const std::exception& e) {
            DatasetResult r;
            r.name = m.name;
            r.failed = true;
            r.failure = e.what();
            results.push_back(std::move(r));
        }
    }
    return report_from_results(std::move(results), opts);
}

namespace {

nlohmann::ordered_json row_to_json(const MetricRow& r) {
    nlohmann::ordered_json j;
    j["f1"] = r.f1;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["iou_change"] = r.iou_change;
    j["iou_nochange"] = r.iou_nochange;
    j["miou"] = r.miou;
    j["tc"] = r.tc;
    return j;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json j;
        j["schema_version"] = report.schema_version;
        nlohmann::ordered_json per;
        for (const DatasetResult& d : report.per_dataset) {
            nlohmann::ordered_json jd;
            if (d.failed) {
                jd["failed"] = true;
                jd["failure"] = d.failure;
            } else {
                jd["t0_to_t1"] = row_to_json(d.fwd);
                jd["t1_to_t0"] = row_to_json(d.bwd);
                jd["tc"] = d.tc;
                jd["pairs_scored"] = d.pairs_scored;
            }
            jd["skipped"] = d.skipped;
            per[d.name] = std::move(jd);
        }
        j["per_dataset"] = std::move(per);
        j["average"] = row_to_json(report.average);
        j["config"] = report.config;
        return j.dump(2) + "\n";
    }

    if (format == ReportFormat::Csv) {
        std::string out =
            "dataset,f1_t0_t1,precision_t0_t1,recall_t0_t1,iou_change_t0_t1,iou_nochange_t0_t1,"
            "miou_t0_t1,f1_t1_t0,precision_t1_t0,recall_t1_t0,iou_change_t1_t0,"
            "iou_nochange_t1_t0,miou_t1_t0,tc\n";
        auto emit_row = [&out](const std::string& name, const MetricRow& f, const MetricRow& b,
                               double tc) {
            out += name + "," + fmt4(f.f1) + "," + fmt4(f.precision) + "," + fmt4(f.recall) + "," +
                   fmt4(f.iou_change) + "," + fmt4(f.iou_nochange) + "," + fmt4(f.miou) + "," +
                   fmt4(b.f1) + "," + fmt4(b.precision) + "," + fmt4(b.recall) + "," +
                   fmt4(b.iou_change) + "," + fmt4(b.iou_nochange) + "," + fmt4(b.miou) + "," +
                   fmt4(tc) + "\n";
        };
        for (const DatasetResult& d : report.per_dataset) {
            if (d.failed) {
                out += d.name + ",failed,,,,,,,,,,,,\n";
                continue;
            }
            emit_row(d.name, d.fwd, d.bwd, d.tc);
        }
        emit_row("Avg.", report.average, report.average, report.average.tc);
        return out;
    }

    // Markdown: the t0->t1 / t1->t0 / TC column layout, one row per dataset
    // plus the averages row (F1 in the direction columns).
    std::string out = "| Dataset | t0→t1 | t1→t0 | TC |\n|---|---|---|---|\n";
    for (const DatasetResult& d : report.per_dataset) {
        if (d.failed) {
            out += "| " + d.name + " | failed | failed | - |\n";
            continue;
        }
        out += "| " + d.name + " | " + fmt4(d.fwd.f1) + " | " + fmt4(d.bwd.f1) + " | " +
               fmt4(d.tc) + " |\n";
    }
    out += "| Avg. | " + fmt4(report.average.f1) + " | " + fmt4(report.average.f1) + " | " +
           fmt4(report.average.tc) + " |\n";
    return out;
}

}  // namespace gescd
