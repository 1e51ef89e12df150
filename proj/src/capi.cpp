#include "gescd/gescd.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>

#include "gescd/bench.hpp"
#include "gescd/config.hpp"
#include "gescd/data.hpp"
#include "gescd/error.hpp"
#include "gescd/pipeline.hpp"
#include "gescd/png_io.hpp"
#include "gescd/version.hpp"

struct gescd_config_t {
    gescd::Config config;
};

struct gescd_pipeline_t {
    gescd::Config config;
    gescd::Pipeline pipeline;
};

struct gescd_report_t {
    gescd::EvalReport report;
    std::map<std::string, std::string> rendered;  // format -> bytes
};

namespace {

thread_local std::string g_last_error;

gescd_status status_from(gescd::ErrorCode code) {
    using gescd::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return GESCD_ERROR_INVALID_ARGUMENT;
        case ErrorCode::Range: return GESCD_ERROR_RANGE;
        case ErrorCode::Io: return GESCD_ERROR_IO;
        case ErrorCode::Layout: return GESCD_ERROR_LAYOUT;
        case ErrorCode::Pairing: return GESCD_ERROR_PAIRING;
        case ErrorCode::BackendUnavailable: return GESCD_ERROR_BACKEND_UNAVAILABLE;
        case ErrorCode::RegistrationFailure: return GESCD_ERROR_REGISTRATION_FAILURE;
        case ErrorCode::EmptyMask: return GESCD_ERROR_EMPTY_MASK;
        case ErrorCode::Internal: return GESCD_ERROR_INTERNAL;
    }
    return GESCD_ERROR_INTERNAL;
}

template <typename Fn>
gescd_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return GESCD_OK;
    } catch (const gescd::Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GESCD_ERROR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return GESCD_ERROR_INTERNAL;
    }
}

gescd::EvalOptions options_from(const gescd::Config& cfg) {
    gescd::EvalOptions opts;
    opts.gt = gescd::gt_select_from_name(cfg.get("eval.gt"));
    opts.average = gescd::average_mode_from_name(cfg.get("eval.average"));
    opts.threads = cfg.get_int("eval.threads");
    opts.config_snapshot = cfg.snapshot();
    return opts;
}

// Grayscale-to-color ramp for the similarity heatmap (blue = similar,
// red = dissimilar).
gescd::Image similarity_heatmap(const gescd::SimilarityMap& sim) {
    gescd::Image img(sim.map.width, sim.map.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = std::clamp((sim.map.at(x, y) + 1.0) / 2.0, 0.0, 1.0);
            std::uint8_t* p = img.at(x, y);
            p[0] = static_cast<std::uint8_t>(255.0 * (1.0 - v));
            p[1] = static_cast<std::uint8_t>(64.0 * (1.0 - std::abs(2.0 * v - 1.0)));
            p[2] = static_cast<std::uint8_t>(255.0 * v);
        }
    return img;
}

gescd::Image proposal_overlay(const gescd::Image& base, const gescd::BinaryMask& mask) {
    gescd::Image out = base;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!mask.at(x, y)) continue;
            std::uint8_t* p = out.at(x, y);
            p[0] = static_cast<std::uint8_t>((p[0] + 2 * 255) / 3);  // tint red
            p[1] = static_cast<std::uint8_t>(p[1] / 3);
            p[2] = static_cast<std::uint8_t>(p[2] / 3);
        }
    return out;
}

}  // namespace

extern "C" {

const char* gescd_version(void) { return gescd::kVersion; }

const char* gescd_last_error(void) { return g_last_error.c_str(); }

gescd_config_t* gescd_config_create(void) {
    try {
        return new gescd_config_t{};
    } catch (...) {
        return nullptr;
    }
}

void gescd_config_free(gescd_config_t* config) { delete config; }

gescd_status gescd_config_load_file(gescd_config_t* config, const char* path) {
    return guarded([&] {
        if (!config || !path)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");
        config->config = gescd::Config::from_file(path);
    });
}

gescd_status gescd_config_set(gescd_config_t* config, const char* key, const char* value) {
    return guarded([&] {
        if (!config || !key || !value)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");
        config->config.set(key, value);
    });
}

gescd_status gescd_config_get(const gescd_config_t* config, const char* key, char* buffer,
                              size_t buffer_size, size_t* needed) {
    return guarded([&] {
        if (!config || !key)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");
        const std::string value = config->config.get(key);
        if (needed) *needed = value.size();
        if (buffer && buffer_size > 0) {
            const size_t n = std::min(buffer_size - 1, value.size());
            std::memcpy(buffer, value.data(), n);
            buffer[n] = '\0';
        }
    });
}

gescd_pipeline_t* gescd_pipeline_create(const gescd_config_t* config) {
    gescd_pipeline_t* out = nullptr;
    const gescd_status st = guarded([&] {
        if (!config) throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null config");
        out = new gescd_pipeline_t{config->config, gescd::Pipeline(config->config)};
    });
    if (st != GESCD_OK) {
        delete out;
        return nullptr;
    }
    return out;
}

void gescd_pipeline_free(gescd_pipeline_t* pipeline) { delete pipeline; }

gescd_status gescd_detect_files(gescd_pipeline_t* pipeline, const char* image_t0,
                                const char* image_t1, const char* out_mask_png,
                                const char* intermediates_prefix) {
    return guarded([&] {
        if (!pipeline || !image_t0 || !image_t1 || !out_mask_png)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");

        const int size = pipeline->pipeline.options().input_size;
        const gescd::Image img0 = resize_bilinear(gescd::read_image(image_t0), size, size);
        const gescd::Image img1 = resize_bilinear(gescd::read_image(image_t1), size, size);
        const gescd::DetectResult result = pipeline->pipeline.detect(img0, img1);
        if (result.registration_fell_back)
            std::fprintf(stderr, "warning: registration failed; fell back to identity\n");

        gescd::BinaryMask mask = result.change.mask;
        gescd::write_mask(mask, out_mask_png);

        if (intermediates_prefix) {
            const std::string prefix(intermediates_prefix);
            gescd::write_image(similarity_heatmap(result.similarity),
                               prefix + "_similarity.png");
            gescd::write_mask(result.pseudo.mask, prefix + "_pseudomask.png");
            gescd::write_image(proposal_overlay(img0, result.change.mask),
                               prefix + "_proposals.png");
        }
    });
}

gescd_status gescd_detect_rgb(gescd_pipeline_t* pipeline, const uint8_t* rgb_t0,
                              const uint8_t* rgb_t1, int32_t width, int32_t height,
                              uint8_t* out_mask) {
    return guarded([&] {
        if (!pipeline || !rgb_t0 || !rgb_t1 || !out_mask)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");
        if (width <= 0 || height <= 0)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "dimensions must be positive");

        gescd::Image img0(width, height), img1(width, height);
        const std::size_t bytes = static_cast<std::size_t>(width) * height * 3;
        std::memcpy(img0.pixels.data(), rgb_t0, bytes);
        std::memcpy(img1.pixels.data(), rgb_t1, bytes);

        const gescd::DetectResult result = pipeline->pipeline.detect(img0, img1);
        for (std::size_t i = 0; i < result.change.mask.data.size(); ++i)
            out_mask[i] = result.change.mask.data[i] ? 255 : 0;
    });
}

gescd_status gescd_evaluate(gescd_pipeline_t* pipeline, const char* const* dataset_roots,
                            size_t root_count, gescd_report_t** out_report) {
    return guarded([&] {
        if (!pipeline || !dataset_roots || root_count == 0 || !out_report)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");

        const gescd::DatasetLayout layout =
            gescd::layout_from_name(pipeline->config.get("data.layout"));
        const int resolution = pipeline->config.get_int("input_size");
        std::vector<gescd::DatasetManifest> manifests;
        for (size_t i = 0; i < root_count; ++i)
            manifests.push_back(gescd::load_dataset(dataset_roots[i], layout, resolution));

        const gescd::EvalOptions opts = options_from(pipeline->config);
        auto* report = new gescd_report_t{};
        report->report = gescd::run_protocol(manifests, pipeline->pipeline, opts);
        *out_report = report;
    });
}

gescd_status gescd_score_external(const gescd_config_t* config, const char* predictions_dir,
                                  const char* dataset_root, gescd_report_t** out_report) {
    return guarded([&] {
        if (!config || !predictions_dir || !dataset_root || !out_report)
            throw gescd::Error(gescd::ErrorCode::InvalidArgument, "null argument");

        const gescd::DatasetLayout layout =
            gescd::layout_from_name(config->config.get("data.layout"));
        const int resolution = config->config.get_int("input_size");
        const gescd::DatasetManifest manifest =
            gescd::load_dataset(dataset_root, layout, resolution);

        const gescd::EvalOptions opts = options_from(config->config);
        std::vector<gescd::DatasetResult> results = {
            gescd::score_external(manifest, predictions_dir, opts)};
        auto* report = new gescd_report_t{};
        report->report = gescd::report_from_results(std::move(results), opts);
        *out_report = report;
    });
}

const char* gescd_report_render(gescd_report_t* report, const char* format) {
    if (!report || !format) {
        g_last_error = "null argument";
        return nullptr;
    }
    try {
        const std::string key(format);
        auto it = report->rendered.find(key);
        if (it == report->rendered.end()) {
            const gescd::ReportFormat fmt = gescd::report_format_from_name(key);
            it = report->rendered.emplace(key, gescd::emit_report(report->report, fmt)).first;
        }
        g_last_error.clear();
        return it->second.c_str();
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return nullptr;
    }
}

void gescd_report_free(gescd_report_t* report) { delete report; }

}  // extern "C"
