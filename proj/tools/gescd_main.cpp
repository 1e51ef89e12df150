// gescd command-line tool. Talks to the core exclusively through the
// shared-library C API (gescd/gescd.h).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gescd/gescd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

int exit_code_for(gescd_status status) {
    switch (status) {
        case GESCD_OK: return kExitOk;
        case GESCD_ERROR_INVALID_ARGUMENT:
        case GESCD_ERROR_RANGE:
        case GESCD_ERROR_IO:
        case GESCD_ERROR_LAYOUT:
        case GESCD_ERROR_PAIRING: return kExitUsage;
        default: return kExitInternal;
    }
}

int fail(gescd_status status) {
    std::fprintf(stderr, "error: %s\n", gescd_last_error());
    return exit_code_for(status);
}

struct ConfigHandle {
    gescd_config_t* ptr = gescd_config_create();
    ~ConfigHandle() { gescd_config_free(ptr); }
};

struct PipelineHandle {
    gescd_pipeline_t* ptr = nullptr;
    ~PipelineHandle() { gescd_pipeline_free(ptr); }
};

struct ReportHandle {
    gescd_report_t* ptr = nullptr;
    ~ReportHandle() { gescd_report_free(ptr); }
};

// Shared flags; every flag has a config-key equivalent and wins over the
// config file.
struct CommonOpts {
    std::string config_file;
    std::string backend;
    std::string register_mode;
    std::string seed;
    std::string gt;
    std::string average;
    std::string layout;
    std::string ransac_iters;
    std::string ransac_thresh;
    std::string threads;
    std::vector<std::string> sets;  // raw key=value overrides
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "Config file (sectioned key=value)");
    cmd->add_option("--backend", o.backend, "Feature backend: synthetic | vith-adapter");
    cmd->add_option("--register", o.register_mode, "Registration: none | homography");
    cmd->add_option("--seed", o.seed, "RANSAC / report seed");
    cmd->add_option("--gt", o.gt, "Ground-truth selection: fwd | bwd | inter");
    cmd->add_option("--average", o.average, "Metric averaging: macro | micro");
    cmd->add_option("--layout", o.layout, "Dataset layout: scd | changevpr");
    cmd->add_option("--ransac-iters", o.ransac_iters, "RANSAC iterations");
    cmd->add_option("--ransac-thresh-px", o.ransac_thresh, "RANSAC inlier threshold (px)");
    cmd->add_option("--threads", o.threads, "Evaluation worker threads");
    cmd->add_option("--set", o.sets, "Extra config override key=value (repeatable)");
}

// Returns GESCD_OK or the first failing status.
gescd_status apply_common(gescd_config_t* cfg, const CommonOpts& o) {
    if (!o.config_file.empty()) {
        const gescd_status st = gescd_config_load_file(cfg, o.config_file.c_str());
        if (st != GESCD_OK) return st;
    }
    auto set_if = [&](const char* key, const std::string& value) -> gescd_status {
        if (value.empty()) return GESCD_OK;
        return gescd_config_set(cfg, key, value.c_str());
    };
    gescd_status st;
    if ((st = set_if("backend", o.backend)) != GESCD_OK) return st;
    if ((st = set_if("register", o.register_mode)) != GESCD_OK) return st;
    if ((st = set_if("seed", o.seed)) != GESCD_OK) return st;
    if ((st = set_if("eval.gt", o.gt)) != GESCD_OK) return st;
    if ((st = set_if("eval.average", o.average)) != GESCD_OK) return st;
    if ((st = set_if("data.layout", o.layout)) != GESCD_OK) return st;
    if ((st = set_if("ransac.max_iterations", o.ransac_iters)) != GESCD_OK) return st;
    if ((st = set_if("ransac.inlier_threshold", o.ransac_thresh)) != GESCD_OK) return st;
    if ((st = set_if("eval.threads", o.threads)) != GESCD_OK) return st;
    for (const std::string& kv : o.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return GESCD_ERROR_INVALID_ARGUMENT;
        }
        st = gescd_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != GESCD_OK) return st;
    }
    return GESCD_OK;
}

std::vector<std::string> split_formats(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string item = csv.substr(start, comma - start);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int write_reports(gescd_report_t* report, const std::string& out_dir,
                  const std::string& formats_csv) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    for (const std::string& fmt : split_formats(formats_csv)) {
        const char* rendered = gescd_report_render(report, fmt.c_str());
        if (!rendered) {
            std::fprintf(stderr, "error: %s\n", gescd_last_error());
            return kExitUsage;
        }
        const std::string ext = fmt == "markdown" ? "md" : fmt;
        const std::string path = out_dir + "/report." + ext;
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
            return kExitUsage;
        }
        f << rendered;
    }
    // The table view always goes to stdout.
    const char* md = gescd_report_render(report, "md");
    if (md) std::fputs(md, stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gescd: zero-shot scene change detection toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gescd_version());

    // detect
    auto* detect = app.add_subcommand("detect", "Detect changes between two images");
    std::string img0, img1, out_path = "change_mask.png";
    bool emit_intermediates = false;
    CommonOpts detect_opts;
    detect->add_option("image_t0", img0, "First (t0) image")->required();
    detect->add_option("image_t1", img1, "Second (t1) image")->required();
    detect->add_option("-o,--out", out_path, "Output mask PNG");
    detect->add_flag("--emit-intermediates", emit_intermediates,
                     "Also write similarity heatmap, pseudo-mask, and proposal overlay");
    add_common_flags(detect, detect_opts);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate on one or more dataset roots");
    std::vector<std::string> roots;
    std::string out_dir = ".";
    std::string out_formats = "json";
    CommonOpts eval_opts;
    evaluate->add_option("roots", roots, "Dataset root directories")->required();
    evaluate->add_option("--out", out_dir, "Directory for report files");
    evaluate->add_option("--out-format", out_formats, "Comma-separated: json,csv,md");
    add_common_flags(evaluate, eval_opts);

    // score-external
    auto* score = app.add_subcommand("score-external",
                                     "Score externally produced predictions on a dataset");
    std::string pred_dir, score_root;
    std::string score_out_dir = ".";
    std::string score_formats = "json";
    CommonOpts score_opts;
    score->add_option("predictions", pred_dir, "Directory of <id>_fwd.png / <id>_bwd.png")
        ->required();
    score->add_option("root", score_root, "Dataset root directory")->required();
    score->add_option("--out", score_out_dir, "Directory for report files");
    score->add_option("--out-format", score_formats, "Comma-separated: json,csv,md");
    add_common_flags(score, score_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (detect->parsed()) {
        if (!std::filesystem::exists(img0)) {
            std::fprintf(stderr, "error: input file does not exist: %s\n", img0.c_str());
            return kExitUsage;
        }
        if (!std::filesystem::exists(img1)) {
            std::fprintf(stderr, "error: input file does not exist: %s\n", img1.c_str());
            return kExitUsage;
        }
        ConfigHandle cfg;
        gescd_status st = apply_common(cfg.ptr, detect_opts);
        if (st != GESCD_OK) return fail(st);

        PipelineHandle pipe;
        pipe.ptr = gescd_pipeline_create(cfg.ptr);
        if (!pipe.ptr) return fail(GESCD_ERROR_BACKEND_UNAVAILABLE);

        std::string prefix;
        if (emit_intermediates) {
            prefix = out_path;
            const std::size_t dot = prefix.rfind('.');
            if (dot != std::string::npos) prefix = prefix.substr(0, dot);
        }
        st = gescd_detect_files(pipe.ptr, img0.c_str(), img1.c_str(), out_path.c_str(),
                                emit_intermediates ? prefix.c_str() : nullptr);
        if (st != GESCD_OK) return fail(st);
        std::printf("wrote %s\n", out_path.c_str());
        return kExitOk;
    }

    if (evaluate->parsed()) {
        ConfigHandle cfg;
        gescd_status st = apply_common(cfg.ptr, eval_opts);
        if (st != GESCD_OK) return fail(st);

        PipelineHandle pipe;
        pipe.ptr = gescd_pipeline_create(cfg.ptr);
        if (!pipe.ptr) return fail(GESCD_ERROR_BACKEND_UNAVAILABLE);

        std::vector<const char*> root_ptrs;
        for (const std::string& r : roots) root_ptrs.push_back(r.c_str());
        ReportHandle report;
        st = gescd_evaluate(pipe.ptr, root_ptrs.data(), root_ptrs.size(), &report.ptr);
        if (st != GESCD_OK) return fail(st);
        return write_reports(report.ptr, out_dir, out_formats);
    }

    if (score->parsed()) {
        ConfigHandle cfg;
        gescd_status st = apply_common(cfg.ptr, score_opts);
        if (st != GESCD_OK) return fail(st);

        ReportHandle report;
        st = gescd_score_external(cfg.ptr, pred_dir.c_str(), score_root.c_str(), &report.ptr);
        if (st != GESCD_OK) return fail(st);
        return write_reports(report.ptr, score_out_dir, score_formats);
    }

    return kExitUsage;
}
