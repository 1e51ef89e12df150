/* gescd -- zero-shot scene change detection toolkit, C API.
 *
 * Opaque-handle interface over the C++ core. All functions returning
 * gescd_status report failure details through gescd_last_error(), which is
 * thread-local. Handles are freed with the matching *_free function; passing
 * NULL to a *_free is a no-op.
 */
#ifndef GESCD_H
#define GESCD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GESCD_API __declspec(dllexport)
#else
#define GESCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gescd_status {
    GESCD_OK = 0,
    GESCD_ERROR_INVALID_ARGUMENT = 1,
    GESCD_ERROR_RANGE = 2,
    GESCD_ERROR_IO = 3,
    GESCD_ERROR_LAYOUT = 4,
    GESCD_ERROR_PAIRING = 5,
    GESCD_ERROR_BACKEND_UNAVAILABLE = 6,
    GESCD_ERROR_REGISTRATION_FAILURE = 7,
    GESCD_ERROR_EMPTY_MASK = 8,
    GESCD_ERROR_INTERNAL = 9
} gescd_status;

typedef struct gescd_config_t gescd_config_t;
typedef struct gescd_pipeline_t gescd_pipeline_t;
typedef struct gescd_report_t gescd_report_t;

GESCD_API const char* gescd_version(void);

/* Message for the most recent failure on this thread ("" when none). */
GESCD_API const char* gescd_last_error(void);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */

GESCD_API gescd_config_t* gescd_config_create(void);
GESCD_API void gescd_config_free(gescd_config_t* config);

/* Loads a sectioned key-value config file on top of the defaults. */
GESCD_API gescd_status gescd_config_load_file(gescd_config_t* config, const char* path);

/* Sets one key (e.g. "threshold.b_right"); unknown keys fail. */
GESCD_API gescd_status gescd_config_set(gescd_config_t* config, const char* key,
                                        const char* value);

/* Copies the effective value into buffer (NUL terminated). *needed receives
 * the full length regardless of buffer size. */
GESCD_API gescd_status gescd_config_get(const gescd_config_t* config, const char* key,
                                        char* buffer, size_t buffer_size, size_t* needed);

/* ------------------------------------------------------------------ */
/* Pipeline                                                            */

/* NULL on failure; details via gescd_last_error(). */
GESCD_API gescd_pipeline_t* gescd_pipeline_create(const gescd_config_t* config);
GESCD_API void gescd_pipeline_free(gescd_pipeline_t* pipeline);

/* Detects changes between two image files and writes the mask as an 8-bit
 * PNG with values {0, 255}. When intermediates_prefix is non-NULL, also
 * writes <prefix>_similarity.png, <prefix>_pseudomask.png, and
 * <prefix>_proposals.png. */
GESCD_API gescd_status gescd_detect_files(gescd_pipeline_t* pipeline, const char* image_t0,
                                          const char* image_t1, const char* out_mask_png,
                                          const char* intermediates_prefix);

/* In-memory detection on interleaved 8-bit RGB buffers of equal size.
 * out_mask receives width*height bytes with values {0, 255}. */
GESCD_API gescd_status gescd_detect_rgb(gescd_pipeline_t* pipeline, const uint8_t* rgb_t0,
                                        const uint8_t* rgb_t1, int32_t width, int32_t height,
                                        uint8_t* out_mask);

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */

/* Runs the evaluation protocol over one or more dataset roots. Layout, gt
 * selection, averaging, and threading come from the config keys
 * data.layout / eval.gt / eval.average / eval.threads. */
GESCD_API gescd_status gescd_evaluate(gescd_pipeline_t* pipeline, const char* const* dataset_roots,
                                      size_t root_count, gescd_report_t** out_report);

/* Scores externally produced predictions (<id>_fwd.png / <id>_bwd.png under
 * predictions_dir) against one dataset root. Needs no backend. */
GESCD_API gescd_status gescd_score_external(const gescd_config_t* config,
                                            const char* predictions_dir, const char* dataset_root,
                                            gescd_report_t** out_report);

/* Renders "json", "csv", or "md". The returned string is owned by the
 * report and valid until gescd_report_free. NULL on failure. */
GESCD_API const char* gescd_report_render(gescd_report_t* report, const char* format);
GESCD_API void gescd_report_free(gescd_report_t* report);

#ifdef __cplusplus
}
#endif

#endif /* GESCD_H */
