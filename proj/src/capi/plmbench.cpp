#include "plmbench/plmbench.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "plm/commands.hpp"
#include "plm/dataset.hpp"
#include "plm/error.hpp"
#include "plm/eval.hpp"
#include "plm/io.hpp"
#include "plm/judge.hpp"
#include "plm/metrics.hpp"
#include "plm/protocol.hpp"
#include "plm/ranker.hpp"
#include "plm/scaling.hpp"
#include "plm/tiling.hpp"

struct plm_client {
    std::shared_ptr<plm::judge::ChatClient> impl;
};

struct plm_judge {
    plm::judge::Judge impl;
};

struct plm_relevance_model {
    plm::ranker::RelevanceModel impl;
};

namespace {

thread_local std::string g_last_error;

plm_status fail(plm_status s, const std::string& msg)
{
    g_last_error = msg;
    return s;
}

// Runs fn and converts any exception into a status code.
template <class F>
plm_status guarded(F&& fn) noexcept
{
    try {
        fn();
        return PLM_OK;
    } catch (const plm::InvalidInput& e) {
        return fail(PLM_ERR_INVALID_INPUT, e.what());
    } catch (const plm::IoError& e) {
        return fail(PLM_ERR_IO, e.what());
    } catch (const plm::ParseFailure& e) {
        return fail(PLM_ERR_PARSE, e.what());
    } catch (const plm::DegenerateFit& e) {
        return fail(PLM_ERR_DEGENERATE_FIT, e.what());
    } catch (const plm::TransportError& e) {
        return fail(PLM_ERR_TRANSPORT, e.what());
    } catch (const plm::ConfigError& e) {
        return fail(PLM_ERR_CONFIG, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(PLM_ERR_PARSE, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(PLM_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PLM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PLM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PLM_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* name)
{
    if (!p)
        throw plm::InvalidInput(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s)
{
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p)
        throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size());
    p[s.size()] = '\0';
    return p;
}

std::string str_or_empty(const char* s)
{
    return s ? std::string(s) : std::string();
}

std::map<std::string, double> parse_pairs(const char* spec, const char* what)
{
    std::map<std::string, double> out;
    if (!spec)
        return out;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) {
        if (part.find_first_not_of(' ') == std::string::npos)
            continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos)
            throw plm::InvalidInput(std::string(what) + ": expected key=value, got '" + part + "'");
        auto key = part.substr(0, eq);
        key.erase(0, key.find_first_not_of(' '));
        key.erase(key.find_last_not_of(' ') + 1);
        const auto val = part.substr(eq + 1);
        char* end = nullptr;
        const double v = std::strtod(val.c_str(), &end);
        if (end == val.c_str() || std::string(end).find_first_not_of(' ') != std::string::npos)
            throw plm::InvalidInput(std::string(what) + ": value for '" + key + "' is not a number");
        out[key] = v;
    }
    return out;
}

class CallbackTransport final : public plm::judge::ChatTransport {
public:
    CallbackTransport(plm_transport_fn fn, void* user) : fn_(fn), user_(user) {}

    std::string complete(const std::string& request_json) override
    {
        char* resp = nullptr;
        const int rc = fn_(user_, request_json.c_str(), &resp);
        std::string text = resp ? resp : "";
        std::free(resp);
        if (rc != 0)
            throw plm::TransportError(text.empty() ? "transport callback returned " + std::to_string(rc) : text);
        return text;
    }

private:
    plm_transport_fn fn_;
    void* user_;
};

plm::judge::EndpointConfig endpoint_from(const plm_endpoint* ep)
{
    plm::judge::EndpointConfig c;
    c.base_url = str_or_empty(ep->base_url);
    c.model_name = str_or_empty(ep->model_name);
    c.api_key_env = str_or_empty(ep->api_key_env);
    c.timeout_s = ep->timeout_s;
    c.max_in_flight = ep->max_in_flight;
    c.max_retries = ep->max_retries;
    c.max_tokens = ep->max_tokens;
    c.backoff_base_ms = ep->backoff_base_ms;
    c.validate();
    return c;
}

} // namespace

extern "C" {

const char* plm_last_error(void)
{
    return g_last_error.c_str();
}

const char* plm_status_name(plm_status s)
{
    switch (s) {
    case PLM_OK:
        return "ok";
    case PLM_ERR_INVALID_INPUT:
        return "invalid input";
    case PLM_ERR_IO:
        return "i/o error";
    case PLM_ERR_PARSE:
        return "parse error";
    case PLM_ERR_DEGENERATE_FIT:
        return "degenerate fit";
    case PLM_ERR_TRANSPORT:
        return "transport error";
    case PLM_ERR_CONFIG:
        return "config error";
    case PLM_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

void plm_free(void* p)
{
    std::free(p);
}

char* plm_strdup(const char* s)
{
    try {
        return dup_string(s ? s : "");
    } catch (...) {
        return nullptr;
    }
}

plm_status plm_plan_image_tiles(int64_t width_px, int64_t height_px, int max_tiles, plm_tile_plan* out)
{
    return guarded([&] {
        require(out, "out");
        const auto p = plm::tiling::plan_image_tiles(width_px, height_px, max_tiles);
        *out = {p.rows, p.cols, p.tile_px, p.thumbnail ? 1 : 0, p.tokens_per_tile, p.total_tokens};
    });
}

plm_status plm_plan_video_tokens(int64_t n_frames, int64_t* out_tokens)
{
    return guarded([&] {
        require(out_tokens, "out_tokens");
        *out_tokens = plm::tiling::plan_video_tokens(n_frames);
    });
}

plm_status plm_sample_frames(int64_t n_total, int64_t k, int64_t** out_indices, size_t* out_len)
{
    return guarded([&] {
        require(out_indices, "out_indices");
        require(out_len, "out_len");
        const auto idx = plm::tiling::sample_frames_uniform(n_total, k);
        auto* buf = static_cast<int64_t*>(std::malloc(std::max<std::size_t>(1, idx.size()) * sizeof(int64_t)));
        if (!buf)
            throw std::bad_alloc();
        std::copy(idx.begin(), idx.end(), buf);
        *out_indices = buf;
        *out_len = idx.size();
    });
}

plm_status plm_interval_iou(double a_start, double a_end, double b_start, double b_end, double* out)
{
    return guarded([&] {
        require(out, "out");
        if (a_start > a_end || b_start > b_end)
            throw plm::InvalidInput("interval start must not exceed end");
        *out = plm::metrics::interval_iou({a_start, a_end}, {b_start, b_end});
    });
}

plm_status plm_fallback_similarity(const char* a, const char* b, double* out)
{
    return guarded([&] {
        require(a, "a");
        require(b, "b");
        require(out, "out");
        *out = plm::judge::fallback_lexical_similarity(a, b);
    });
}

plm_status plm_parse_option(const char* raw, int n_options, int strict, int* out_index)
{
    return guarded([&] {
        require(raw, "raw");
        require(out_index, "out_index");
        const auto r = plm::protocol::parse_option(raw, n_options, strict != 0);
        *out_index = r ? *r : -1;
    });
}

plm_status plm_parse_interval(const char* raw, int max_frame, int* out_found, double* out_start, double* out_end)
{
    return guarded([&] {
        require(raw, "raw");
        require(out_found, "out_found");
        require(out_start, "out_start");
        require(out_end, "out_end");
        const auto r = plm::protocol::parse_interval_answer(raw, max_frame);
        *out_found = r ? 1 : 0;
        *out_start = r ? r->start : 0;
        *out_end = r ? r->end : 0;
    });
}

plm_status plm_parse_dense_captions(const char* raw, int max_frame, char** out_json)
{
    return guarded([&] {
        require(raw, "raw");
        require(out_json, "out_json");
        const auto t = plm::protocol::parse_dense_captions(raw, max_frame);
        *out_json = dup_string(t ? plm::io::to_json(*t).dump() : "null");
    });
}

plm_status plm_fit_power_law(const double* flops, const double* error, size_t n, plm_power_law* out)
{
    return guarded([&] {
        require(out, "out");
        if (n > 0) {
            require(flops, "flops");
            require(error, "error");
        }
        std::vector<plm::scaling::RunPoint> pts;
        for (size_t i = 0; i < n; ++i)
            pts.push_back({flops[i], error[i], ""});
        const auto f = plm::scaling::fit_power_law(pts);
        *out = {f.alpha, f.beta, f.rmse_log, f.n_points};
    });
}

void plm_endpoint_defaults(plm_endpoint* ep)
{
    if (!ep)
        return;
    const plm::judge::EndpointConfig d;
    *ep = {nullptr, nullptr, nullptr, d.timeout_s, d.max_in_flight, d.max_retries, d.max_tokens, d.backoff_base_ms};
}

plm_status plm_client_create(const plm_endpoint* ep, const char* cache_path, plm_transport_fn fn, void* user,
                             plm_client** out)
{
    return guarded([&] {
        require(ep, "endpoint");
        require(out, "out");
        const auto cfg = endpoint_from(ep);
        std::shared_ptr<plm::judge::ChatTransport> t;
        if (fn)
            t = std::make_shared<CallbackTransport>(fn, user);
        else
            t = plm::judge::make_http_transport(cfg);
        auto cache = cache_path && *cache_path ? std::make_shared<plm::judge::ResponseCache>(cache_path)
                                               : std::make_shared<plm::judge::ResponseCache>();
        *out = new plm_client{std::make_shared<plm::judge::ChatClient>(cfg, t, cache)};
    });
}

void plm_client_destroy(plm_client* c)
{
    delete c;
}

plm_status plm_client_ask(plm_client* c, const char* template_id, const char* system_msg, const char* user_msg,
                          char** out_text)
{
    return guarded([&] {
        require(c, "client");
        require(user_msg, "user_msg");
        require(out_text, "out_text");
        plm::judge::ChatRequest r;
        r.template_id = str_or_empty(template_id);
        if (system_msg)
            r.messages.push_back({"system", system_msg});
        r.messages.push_back({"user", user_msg});
        *out_text = dup_string(c->impl->ask(r));
    });
}

plm_status plm_client_stats_get(const plm_client* c, plm_client_stats* out)
{
    return guarded([&] {
        require(c, "client");
        require(out, "out");
        const auto s = c->impl->stats();
        *out = {s.requests_sent, s.cache_hits, s.failures, s.peak_in_flight};
    });
}

plm_status plm_judge_create(plm_client* client, plm_judge** out)
{
    return guarded([&] {
        require(out, "out");
        *out = new plm_judge{plm::judge::Judge(client ? client->impl : nullptr)};
    });
}

void plm_judge_destroy(plm_judge* j)
{
    delete j;
}

plm_status plm_judge_qa(plm_judge* j, const char* question, const char* target, const char* candidate, int* out_yes,
                        double* out_score, int* out_parse_failure)
{
    return guarded([&] {
        require(j, "judge");
        require(question, "question");
        require(target, "target");
        require(candidate, "candidate");
        const auto v = j->impl.judge_qa(question, target, candidate);
        if (out_yes)
            *out_yes = v.pred == plm::metrics::Verdict::yes ? 1 : 0;
        if (out_score)
            *out_score = v.score;
        if (out_parse_failure)
            *out_parse_failure = v.parse_failure ? 1 : 0;
    });
}

plm_status plm_judge_caption(plm_judge* j, const char* gt, const char* pred, double* out_score,
                             int* out_parse_failure)
{
    return guarded([&] {
        require(j, "judge");
        require(gt, "gt");
        require(pred, "pred");
        const auto s = j->impl.judge_caption_pair(gt, pred);
        if (out_score)
            *out_score = s.score;
        if (out_parse_failure)
            *out_parse_failure = s.parse_failure ? 1 : 0;
    });
}

plm_status plm_relevance_model_load(const char* path, plm_relevance_model** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        auto m = plm::io::relevance_model_from_json(nlohmann::json::parse(plm::io::read_text(path)));
        *out = new plm_relevance_model{std::move(m)};
    });
}

void plm_relevance_model_destroy(plm_relevance_model* m)
{
    delete m;
}

plm_status plm_relevance_model_score(const plm_relevance_model* m, const double* pooled, size_t n, double* out)
{
    return guarded([&] {
        require(m, "model");
        require(out, "out");
        if (n > 0)
            require(pooled, "pooled");
        *out = m->impl.score(std::span<const double>(pooled, n));
    });
}

void plm_segment_config_defaults(plm_segment_config* cfg)
{
    if (!cfg)
        return;
    const plm::segmenter::SegmenterConfig d;
    *cfg = {d.w, d.theta_b, d.min_sep_s, d.target_dur_s, d.max_dur_s, d.snap_tol_s};
}

plm_status plm_cmd_segment(const char* features_path, const char* shots_path, const plm_segment_config* cfg,
                           const char* out_path, size_t* out_count)
{
    return guarded([&] {
        require(features_path, "features_path");
        require(out_path, "out_path");
        plm::segmenter::SegmenterConfig c;
        if (cfg)
            c = {cfg->w, cfg->theta_b, cfg->min_sep_s, cfg->target_dur_s, cfg->max_dur_s, cfg->snap_tol_s};
        const auto n = plm::commands::segment(features_path, str_or_empty(shots_path), c, out_path);
        if (out_count)
            *out_count = n;
    });
}

plm_status plm_cmd_rank(const char* segments_path, const char* evidence_path, const char* thresholds,
                        const char* model_path, const char* out_segments, const char* out_report, size_t* out_total,
                        size_t* out_kept)
{
    return guarded([&] {
        require(segments_path, "segments_path");
        require(evidence_path, "evidence_path");
        require(out_segments, "out_segments");
        require(out_report, "out_report");
        const auto s = plm::commands::rank(segments_path, evidence_path, parse_pairs(thresholds, "thresholds"),
                                           str_or_empty(model_path), out_segments, out_report);
        if (out_total)
            *out_total = s.total;
        if (out_kept)
            *out_kept = s.kept;
    });
}

plm_status plm_cmd_scaling_fit(const char* csv_path, const char* out_dir, int fit_all_points, const char* baselines)
{
    return guarded([&] {
        require(csv_path, "csv_path");
        require(out_dir, "out_dir");
        plm::commands::scaling_fit(csv_path, out_dir, fit_all_points != 0, parse_pairs(baselines, "baselines"));
    });
}

plm_status plm_cmd_mcq_expand(const char* in_path, const char* out_path, uint64_t seed, size_t* out_count)
{
    return guarded([&] {
        require(in_path, "in_path");
        require(out_path, "out_path");
        const auto n = plm::commands::mcq_expand(in_path, out_path, seed);
        if (out_count)
            *out_count = n;
    });
}

plm_status plm_cmd_mcq_filter(const char* in_path, const char* out_path, const char* report_path,
                              plm_client* text_only_client, size_t* out_kept, size_t* out_dropped,
                              size_t* out_flagged)
{
    return guarded([&] {
        require(in_path, "in_path");
        require(out_path, "out_path");
        require(text_only_client, "text_only_client");
        const auto s =
            plm::commands::mcq_filter(in_path, out_path, str_or_empty(report_path), *text_only_client->impl);
        if (out_kept)
            *out_kept = s.kept;
        if (out_dropped)
            *out_dropped = s.dropped;
        if (out_flagged)
            *out_flagged = s.flagged;
    });
}

plm_status plm_cmd_mcq_balance(const char* in_path, const char* out_path, uint64_t seed, double slack,
                               size_t* out_count)
{
    return guarded([&] {
        require(in_path, "in_path");
        require(out_path, "out_path");
        const auto n = plm::commands::mcq_balance(in_path, out_path, seed, slack);
        if (out_count)
            *out_count = n;
    });
}

plm_status plm_cmd_overlay(const char* frames_dir, const char* tracks_path, const char* out_dir, int64_t k,
                           int thickness_px, size_t* out_written)
{
    return guarded([&] {
        require(frames_dir, "frames_dir");
        require(tracks_path, "tracks_path");
        require(out_dir, "out_dir");
        const auto n = plm::commands::overlay(frames_dir, tracks_path, out_dir, k, thickness_px);
        if (out_written)
            *out_written = n;
    });
}

plm_status plm_cmd_validate(const char* path, const char* schema, char** out_json, size_t* out_count)
{
    return guarded([&] {
        require(path, "path");
        require(schema, "schema");
        const auto v = plm::dataset::validate_dataset(path, schema);
        if (out_json) {
            nlohmann::json a = nlohmann::json::array();
            for (const auto& x : v)
                a.push_back({{"line", x.line}, {"message", x.message}});
            *out_json = dup_string(a.dump());
        }
        if (out_count)
            *out_count = v.size();
    });
}

plm_status plm_cmd_eval(const plm_eval_options* opts, char** out_table, char** out_report_json)
{
    return guarded([&] {
        require(opts, "opts");
        require(opts->config_path, "config_path");
        auto cfg = plm::eval::load_run_config(opts->config_path);
        if (opts->task) {
            try {
                cfg.task = plm::protocol::task_from_string(opts->task);
            } catch (const plm::InvalidInput& e) {
                throw plm::ConfigError(e.what());
            }
        }
        if (opts->gt_path)
            cfg.gt_path = opts->gt_path;
        if (opts->predictions_path)
            cfg.predictions_path = opts->predictions_path;
        if (opts->report_path)
            cfg.report_path = opts->report_path;
        if (opts->cache_path)
            cfg.cache_path = opts->cache_path;
        plm::eval::Transports tr;
        if (opts->judge_fn)
            tr.judge = std::make_shared<CallbackTransport>(opts->judge_fn, opts->judge_user);
        if (opts->model_fn)
            tr.model = std::make_shared<CallbackTransport>(opts->model_fn, opts->model_user);
        const auto res = plm::eval::run_eval(cfg, tr);
        if (out_table)
            *out_table = dup_string(res.table);
        if (out_report_json)
            *out_report_json = dup_string(res.report.dump(2) + "\n");
    });
}

} // extern "C"
