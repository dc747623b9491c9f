// Command-line front end. Talks to the library only through the C API.
#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plmbench/plmbench.h"

namespace {

// Exit codes: 0 success, 1 dataset violations, 2 any error.
int report(plm_status s)
{
    if (s == PLM_OK)
        return 0;
    std::fprintf(stderr, "error (%s): %s\n", plm_status_name(s), plm_last_error());
    return 2;
}

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (const auto& p : parts)
        out += (out.empty() ? "" : ",") + p;
    return out;
}

const char* or_null(const std::string& s)
{
    return s.empty() ? nullptr : s.c_str();
}

struct EndpointArgs {
    std::string base_url;
    std::string model;
    std::string api_key_env;
    std::string cache;
    int max_in_flight = 4;
    int max_retries = 3;
    double timeout_s = 60;

    void add(CLI::App* app)
    {
        app->add_option("--base-url", base_url, "Chat-completions base URL")->required();
        app->add_option("--model", model, "Model name")->required();
        app->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
        app->add_option("--cache", cache, "Response cache (JSONL)");
        app->add_option("--max-in-flight", max_in_flight)->capture_default_str();
        app->add_option("--max-retries", max_retries)->capture_default_str();
        app->add_option("--timeout", timeout_s, "Seconds per request")->capture_default_str();
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Video-language benchmark toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    // segment
    auto* seg = app.add_subcommand("segment", "Propose temporal segments from per-frame features");
    std::string seg_features, seg_shots, seg_out;
    plm_segment_config seg_cfg;
    plm_segment_config_defaults(&seg_cfg);
    seg->add_option("--features", seg_features, "features.jsonl")->required();
    seg->add_option("--shots", seg_shots, "shots.jsonl");
    seg->add_option("--out", seg_out, "segments.jsonl")->required();
    seg->add_option("--w", seg_cfg.w)->capture_default_str();
    seg->add_option("--theta-b", seg_cfg.theta_b)->capture_default_str();
    seg->add_option("--min-sep-s", seg_cfg.min_sep_s)->capture_default_str();
    seg->add_option("--target-dur-s", seg_cfg.target_dur_s)->capture_default_str();
    seg->add_option("--max-dur-s", seg_cfg.max_dur_s)->capture_default_str();
    seg->add_option("--snap-tol-s", seg_cfg.snap_tol_s)->capture_default_str();
    seg->callback([&] {
        size_t n = 0;
        rc = report(plm_cmd_segment(seg_features.c_str(), or_null(seg_shots), &seg_cfg, seg_out.c_str(), &n));
        if (rc == 0)
            std::printf("wrote %zu segments to %s\n", n, seg_out.c_str());
    });

    // rank
    auto* rk = app.add_subcommand("rank", "Filter segments with precomputed evidence");
    std::string rk_segments, rk_evidence, rk_model, rk_out, rk_report;
    std::vector<std::string> rk_thresholds;
    rk->add_option("--segments", rk_segments)->required();
    rk->add_option("--evidence", rk_evidence)->required();
    rk->add_option("--threshold", rk_thresholds, "key=value (asd_max, hoi_min, asr_min, relevance_min)");
    rk->add_option("--model", rk_model, "relevance.model.json");
    rk->add_option("--out", rk_out, "Filtered segments.jsonl")->required();
    rk->add_option("--report", rk_report, "rank_report.jsonl")->required();
    rk->callback([&] {
        size_t total = 0, kept = 0;
        const auto th = join(rk_thresholds);
        rc = report(plm_cmd_rank(rk_segments.c_str(), rk_evidence.c_str(), th.c_str(), or_null(rk_model),
                                 rk_out.c_str(), rk_report.c_str(), &total, &kept));
        if (rc == 0)
            std::printf("kept %zu of %zu segments\n", kept, total);
    });

    // tile
    auto* tile = app.add_subcommand("tile", "Tiling and token accounting");
    tile->require_subcommand(1);
    auto* tplan = tile->add_subcommand("plan", "Tile grid for an image");
    std::int64_t tw = 0, th = 0;
    int tmax = 36;
    tplan->add_option("--width", tw)->required();
    tplan->add_option("--height", th)->required();
    tplan->add_option("--max-tiles", tmax)->capture_default_str();
    tplan->callback([&] {
        plm_tile_plan p;
        rc = report(plm_plan_image_tiles(tw, th, tmax, &p));
        if (rc == 0)
            std::printf("{\"rows\":%d,\"cols\":%d,\"tile_px\":%d,\"thumbnail\":%s,\"tokens_per_tile\":%d,"
                        "\"total_tokens\":%" PRId64 "}\n",
                        p.rows, p.cols, p.tile_px, p.thumbnail ? "true" : "false", p.tokens_per_tile,
                        p.total_tokens);
    });
    auto* tframes = tile->add_subcommand("frames", "Uniform frame indices");
    std::int64_t ftotal = 0, fk = 32;
    tframes->add_option("--total", ftotal)->required();
    tframes->add_option("--k", fk)->capture_default_str();
    tframes->callback([&] {
        int64_t* idx = nullptr;
        size_t n = 0;
        rc = report(plm_sample_frames(ftotal, fk, &idx, &n));
        if (rc != 0)
            return;
        std::int64_t tokens = 0;
        plm_plan_video_tokens(static_cast<int64_t>(n), &tokens);
        std::printf("{\"indices\":[");
        for (size_t i = 0; i < n; ++i)
            std::printf("%s%" PRId64, i ? "," : "", idx[i]);
        std::printf("],\"total_tokens\":%" PRId64 "}\n", tokens);
        plm_free(idx);
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Score one benchmark task");
    std::string ev_task, ev_config, ev_gt, ev_pred, ev_report, ev_cache;
    ev->add_option("task", ev_task, "fgqa, sgqa, rcap, rtloc or rdcap")->required();
    ev->add_option("--config", ev_config, "Run config (INI)")->required();
    ev->add_option("--gt", ev_gt, "Override [run] gt");
    ev->add_option("--predictions", ev_pred, "Override [run] predictions");
    ev->add_option("--report", ev_report, "Override [run] report");
    ev->add_option("--cache", ev_cache, "Override [run] cache");
    ev->callback([&] {
        plm_eval_options o{};
        o.config_path = ev_config.c_str();
        o.task = ev_task.c_str();
        o.gt_path = or_null(ev_gt);
        o.predictions_path = or_null(ev_pred);
        o.report_path = or_null(ev_report);
        o.cache_path = or_null(ev_cache);
        char* table = nullptr;
        rc = report(plm_cmd_eval(&o, &table, nullptr));
        if (rc == 0)
            std::fputs(table, stdout);
        plm_free(table);
    });

    // scaling
    auto* sc = app.add_subcommand("scaling", "Scaling-law analysis");
    sc->require_subcommand(1);
    auto* sfit = sc->add_subcommand("fit", "Pareto frontier and power-law fit per group");
    std::string sc_csv, sc_out;
    bool sc_all = false;
    std::vector<std::string> sc_baselines;
    sfit->add_option("--runpoints", sc_csv, "runpoints.csv (flops,error,group)")->required();
    sfit->add_option("--out-dir", sc_out)->required();
    sfit->add_flag("--all-points", sc_all, "Fit every point instead of the frontier");
    sfit->add_option("--baseline", sc_baselines, "group=error reference line");
    sfit->callback([&] {
        const auto b = join(sc_baselines);
        rc = report(plm_cmd_scaling_fit(sc_csv.c_str(), sc_out.c_str(), sc_all ? 1 : 0, b.c_str()));
        if (rc == 0)
            std::printf("wrote %s/scaling_report.json\n", sc_out.c_str());
    });

    // mcq
    auto* mcq = app.add_subcommand("mcq", "Multiple-choice benchmark construction");
    mcq->require_subcommand(1);
    std::string mq_in, mq_out, mq_report;
    std::uint64_t mq_seed = 0;
    double mq_slack = 1.5;
    auto* mexp = mcq->add_subcommand("expand", "Expand MCQs into binary probes");
    mexp->add_option("--in", mq_in, "fgqa.jsonl")->required();
    mexp->add_option("--out", mq_out, "probes.jsonl")->required();
    mexp->add_option("--seed", mq_seed)->required();
    mexp->callback([&] {
        size_t n = 0;
        rc = report(plm_cmd_mcq_expand(mq_in.c_str(), mq_out.c_str(), mq_seed, &n));
        if (rc == 0)
            std::printf("wrote %zu probes\n", n);
    });
    auto* mfil = mcq->add_subcommand("filter", "Drop questions a text-only model answers");
    EndpointArgs mq_ep;
    mfil->add_option("--in", mq_in)->required();
    mfil->add_option("--out", mq_out)->required();
    mfil->add_option("--report", mq_report, "Per-item status JSONL");
    mq_ep.add(mfil);
    mfil->callback([&] {
        plm_endpoint ep;
        plm_endpoint_defaults(&ep);
        ep.base_url = mq_ep.base_url.c_str();
        ep.model_name = mq_ep.model.c_str();
        ep.api_key_env = mq_ep.api_key_env.c_str();
        ep.max_in_flight = mq_ep.max_in_flight;
        ep.max_retries = mq_ep.max_retries;
        ep.timeout_s = mq_ep.timeout_s;
        plm_client* client = nullptr;
        rc = report(plm_client_create(&ep, or_null(mq_ep.cache), nullptr, nullptr, &client));
        if (rc != 0)
            return;
        size_t kept = 0, dropped = 0, flagged = 0;
        rc = report(plm_cmd_mcq_filter(mq_in.c_str(), mq_out.c_str(), or_null(mq_report), client, &kept, &dropped,
                                       &flagged));
        plm_client_destroy(client);
        if (rc == 0)
            std::printf("kept %zu, dropped %zu, flagged %zu\n", kept, dropped, flagged);
    });
    auto* mbal = mcq->add_subcommand("balance", "Undersample over-represented type/domain cells");
    mbal->add_option("--in", mq_in)->required();
    mbal->add_option("--out", mq_out)->required();
    mbal->add_option("--seed", mq_seed)->required();
    mbal->add_option("--slack", mq_slack)->capture_default_str();
    mbal->callback([&] {
        size_t n = 0;
        rc = report(plm_cmd_mcq_balance(mq_in.c_str(), mq_out.c_str(), mq_seed, mq_slack, &n));
        if (rc == 0)
            std::printf("kept %zu items\n", n);
    });

    // overlay
    auto* ov = app.add_subcommand("overlay", "Draw box tracks on sampled frames");
    std::string ov_frames, ov_tracks, ov_out;
    std::int64_t ov_k = 32;
    int ov_thick = 4;
    ov->add_option("--frames", ov_frames, "Directory of {video_id}/{idx:05}.png")->required();
    ov->add_option("--tracks", ov_tracks, "tracks.jsonl")->required();
    ov->add_option("--out", ov_out)->required();
    ov->add_option("--k", ov_k)->capture_default_str();
    ov->add_option("--thickness", ov_thick)->capture_default_str();
    ov->callback([&] {
        size_t n = 0;
        rc = report(plm_cmd_overlay(ov_frames.c_str(), ov_tracks.c_str(), ov_out.c_str(), ov_k, ov_thick, &n));
        if (rc == 0)
            std::printf("wrote %zu frames\n", n);
    });

    // validate
    auto* va = app.add_subcommand("validate", "Check a dataset file against its schema");
    std::string va_schema, va_path;
    va->add_option("schema", va_schema)->required();
    va->add_option("path", va_path)->required();
    va->callback([&] {
        char* js = nullptr;
        size_t n = 0;
        rc = report(plm_cmd_validate(va_path.c_str(), va_schema.c_str(), &js, &n));
        if (rc == 0) {
            if (n == 0)
                std::printf("ok\n");
            else
                std::printf("%zu violation(s)\n%s\n", n, js);
            rc = n == 0 ? 0 : 1;
        }
        plm_free(js);
    });

    CLI11_PARSE(app, argc, argv);
    return rc;
}
