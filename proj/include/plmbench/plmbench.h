#ifndef PLMBENCH_H
#define PLMBENCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PLM_API __declspec(dllexport)
#else
#define PLM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every entry point returns a status. On failure the message is available
 * from plm_last_error() on the calling thread until the next failing call. */
typedef enum plm_status {
    PLM_OK = 0,
    PLM_ERR_INVALID_INPUT = 1,
    PLM_ERR_IO = 2,
    PLM_ERR_PARSE = 3,
    PLM_ERR_DEGENERATE_FIT = 4,
    PLM_ERR_TRANSPORT = 5,
    PLM_ERR_CONFIG = 6,
    PLM_ERR_INTERNAL = 7
} plm_status;

PLM_API const char* plm_last_error(void);
PLM_API const char* plm_status_name(plm_status s);

/* Releases any buffer or string returned through an out-parameter. */
PLM_API void plm_free(void* p);

/* Copies s into a buffer the library can release; transport callbacks must
 * return their responses this way. */
PLM_API char* plm_strdup(const char* s);

/* Tiling and token accounting */

typedef struct plm_tile_plan {
    int rows;
    int cols;
    int tile_px;
    int thumbnail;
    int tokens_per_tile;
    int64_t total_tokens;
} plm_tile_plan;

PLM_API plm_status plm_plan_image_tiles(int64_t width_px, int64_t height_px, int max_tiles, plm_tile_plan* out);
PLM_API plm_status plm_plan_video_tokens(int64_t n_frames, int64_t* out_tokens);
/* *out_indices is released with plm_free. */
PLM_API plm_status plm_sample_frames(int64_t n_total, int64_t k, int64_t** out_indices, size_t* out_len);

/* Metrics and parsers */

PLM_API plm_status plm_interval_iou(double a_start, double a_end, double b_start, double b_end, double* out);
PLM_API plm_status plm_fallback_similarity(const char* a, const char* b, double* out);
/* *out_index is -1 when no option letter is found. */
PLM_API plm_status plm_parse_option(const char* raw, int n_options, int strict, int* out_index);
PLM_API plm_status plm_parse_interval(const char* raw, int max_frame, int* out_found, double* out_start,
                                      double* out_end);
/* Normalised track as JSON, or "null" when nothing parses. */
PLM_API plm_status plm_parse_dense_captions(const char* raw, int max_frame, char** out_json);

typedef struct plm_power_law {
    double alpha;
    double beta;
    double rmse_log;
    int n_points;
} plm_power_law;

PLM_API plm_status plm_fit_power_law(const double* flops, const double* error, size_t n, plm_power_law* out);

/* Chat endpoints */

typedef struct plm_endpoint {
    const char* base_url;
    const char* model_name;
    const char* api_key_env;
    double timeout_s;
    int max_in_flight;
    int max_retries;
    int max_tokens;
    int backoff_base_ms;
} plm_endpoint;

PLM_API void plm_endpoint_defaults(plm_endpoint* ep);

/* Custom transport: receives the serialized request, stores a response made
 * with plm_strdup in *response and returns 0. A nonzero return is a
 * transport failure (retried); *response may then carry a message. Calls
 * can arrive concurrently from up to max_in_flight worker threads. */
typedef int (*plm_transport_fn)(void* user, const char* request_json, char** response);

typedef struct plm_client plm_client;

typedef struct plm_client_stats {
    uint64_t requests_sent;
    uint64_t cache_hits;
    uint64_t failures;
    int peak_in_flight;
} plm_client_stats;

/* cache_path may be NULL for an in-memory cache. fn NULL selects HTTP. */
PLM_API plm_status plm_client_create(const plm_endpoint* ep, const char* cache_path, plm_transport_fn fn,
                                     void* user, plm_client** out);
PLM_API void plm_client_destroy(plm_client* c);
PLM_API plm_status plm_client_ask(plm_client* c, const char* template_id, const char* system_msg,
                                  const char* user_msg, char** out_text);
PLM_API plm_status plm_client_stats_get(const plm_client* c, plm_client_stats* out);

typedef struct plm_judge plm_judge;

/* client NULL selects the lexical fallback. The judge keeps its own
 * reference; the client may be destroyed afterwards. */
PLM_API plm_status plm_judge_create(plm_client* client, plm_judge** out);
PLM_API void plm_judge_destroy(plm_judge* j);
PLM_API plm_status plm_judge_qa(plm_judge* j, const char* question, const char* target, const char* candidate,
                                int* out_yes, double* out_score, int* out_parse_failure);
PLM_API plm_status plm_judge_caption(plm_judge* j, const char* gt, const char* pred, double* out_score,
                                     int* out_parse_failure);

typedef struct plm_relevance_model plm_relevance_model;

PLM_API plm_status plm_relevance_model_load(const char* path, plm_relevance_model** out);
PLM_API void plm_relevance_model_destroy(plm_relevance_model* m);
PLM_API plm_status plm_relevance_model_score(const plm_relevance_model* m, const double* pooled, size_t n,
                                             double* out);

/* File-level commands */

typedef struct plm_segment_config {
    int w;
    double theta_b;
    double min_sep_s;
    double target_dur_s;
    double max_dur_s;
    double snap_tol_s;
} plm_segment_config;

PLM_API void plm_segment_config_defaults(plm_segment_config* cfg);
/* shots_path may be NULL. */
PLM_API plm_status plm_cmd_segment(const char* features_path, const char* shots_path,
                                   const plm_segment_config* cfg, const char* out_path, size_t* out_count);

/* thresholds: comma separated key=value pairs. model_path may be NULL. */
PLM_API plm_status plm_cmd_rank(const char* segments_path, const char* evidence_path, const char* thresholds,
                                const char* model_path, const char* out_segments, const char* out_report,
                                size_t* out_total, size_t* out_kept);

/* baselines: comma separated group=error pairs, may be NULL. */
PLM_API plm_status plm_cmd_scaling_fit(const char* csv_path, const char* out_dir, int fit_all_points,
                                       const char* baselines);

PLM_API plm_status plm_cmd_mcq_expand(const char* in_path, const char* out_path, uint64_t seed, size_t* out_count);
PLM_API plm_status plm_cmd_mcq_filter(const char* in_path, const char* out_path, const char* report_path,
                                      plm_client* text_only_client, size_t* out_kept, size_t* out_dropped,
                                      size_t* out_flagged);
PLM_API plm_status plm_cmd_mcq_balance(const char* in_path, const char* out_path, uint64_t seed, double slack,
                                       size_t* out_count);
PLM_API plm_status plm_cmd_overlay(const char* frames_dir, const char* tracks_path, const char* out_dir, int64_t k,
                                   int thickness_px, size_t* out_written);

/* *out_json is a JSON array of {line, message}; empty means valid. */
PLM_API plm_status plm_cmd_validate(const char* path, const char* schema, char** out_json, size_t* out_count);

typedef struct plm_eval_options {
    const char* config_path; /* INI file, required */
    /* Optional overrides of [run] keys; NULL keeps the file's value. */
    const char* task;
    const char* gt_path;
    const char* predictions_path;
    const char* report_path;
    const char* cache_path;
    /* Optional transports replacing HTTP for the judge and the model. */
    plm_transport_fn judge_fn;
    void* judge_user;
    plm_transport_fn model_fn;
    void* model_user;
} plm_eval_options;

/* *out_table receives the human-readable summary, *out_report_json the full
 * report; either may be NULL. */
PLM_API plm_status plm_cmd_eval(const plm_eval_options* opts, char** out_table, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif
