#pragma once

#include <map>
#include <string>
#include <vector>

#include "gescd/data.hpp"
#include "gescd/metrics.hpp"
#include "gescd/pipeline.hpp"

namespace gescd {

enum class GtSelect { Fwd, Bwd, Inter };
enum class AverageMode { Macro, Micro };

GtSelect gt_select_from_name(const std::string& name);
AverageMode average_mode_from_name(const std::string& name);

struct EvalOptions {
    GtSelect gt = GtSelect::Fwd;
    AverageMode average = AverageMode::Macro;
    int threads = 1;
    /// Effective configuration echoed into the report.
    std::map<std::string, std::string> config_snapshot;
};

struct DatasetResult {
    std::string name;
    MetricRow fwd;  // t0 -> t1
    MetricRow bwd;  // t1 -> t0
    double tc = 0.0;
    int pairs_scored = 0;
    std::vector<std::string> skipped;  // per-pair failures, by id
    bool failed = false;
    std::string failure;
};

struct EvalReport {
    int schema_version = 1;
    std::vector<DatasetResult> per_dataset;
    /// Unweighted mean over (dataset x direction) cells of the non-failed
    /// datasets; tc is the mean of per-dataset TC values.
    MetricRow average;
    std::map<std::string, std::string> config;
};

/// Runs detection in both temporal orders for every pair, scores each order
/// against the selected ground truth, and computes TC between the two
/// predictions. Per-pair failures are recorded and skipped.
DatasetResult run_eval(const DatasetManifest& manifest, const Pipeline& pipeline,
                       const EvalOptions& opts);

/// One fragment per manifest plus the cross-dataset average row.
EvalReport run_protocol(const std::vector<DatasetManifest>& manifests, const Pipeline& pipeline,
                        const EvalOptions& opts);

/// Scores externally produced predictions (<id>_fwd.png / <id>_bwd.png in
/// predictions_dir) on the same protocol; TC comes from the two files.
DatasetResult score_external(const DatasetManifest& manifest, const std::string& predictions_dir,
                             const EvalOptions& opts);

EvalReport report_from_results(std::vector<DatasetResult> results, const EvalOptions& opts);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat report_format_from_name(const std::string& name);

/// Stable field ordering; byte-identical output for identical reports.
std::string emit_report(const EvalReport& report, ReportFormat format);

}  // namespace gescd
