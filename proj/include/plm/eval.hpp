#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plm/judge.hpp"
#include "plm/protocol.hpp"

namespace plm::eval {

/// Everything a benchmark run depends on. Loaded from an INI file:
///
///   [run]       task, gt, predictions, report, cache, seed, strict_options,
///               record_timestamp, addenda (comma separated template ids)
///   [endpoint]  judge endpoint; omit the section to use the lexical fallback
///   [model]     model-under-test endpoint, used when `predictions` is empty
///
/// Endpoint keys: base_url, model_name, api_key_env, timeout_s,
/// max_in_flight, max_retries, max_tokens, backoff_base_ms.
struct RunConfig {
    protocol::Task task = protocol::Task::fgqa;
    std::string gt_path;
    std::string predictions_path;
    std::string report_path;
    std::string cache_path;
    std::uint64_t seed = 0;
    bool strict_options = false;
    bool record_timestamp = false;
    std::vector<std::string> addenda;
    std::optional<judge::EndpointConfig> judge_endpoint;
    std::optional<judge::EndpointConfig> model_endpoint;

    /// Stable text form of the fields that affect scores.
    std::string canonical() const;
    void validate() const;
};

RunConfig load_run_config(const std::string& ini_path);

/// Transports to use instead of HTTP; null members fall back to HTTP.
struct Transports {
    std::shared_ptr<judge::ChatTransport> judge;
    std::shared_ptr<judge::ChatTransport> model;
};

struct EvalResult {
    nlohmann::json report;
    std::string table; // human-readable summary
    judge::ClientStats judge_stats;
    judge::ClientStats model_stats;
};

/// Formats prompts (or reads predictions), parses, scores and aggregates one
/// task. Per-item problems are recorded as parse failures; only config errors
/// and transport exhaustion throw. Writes report_path when it is set.
EvalResult run_eval(const RunConfig& cfg, const Transports& transports = {});

/// Recomputes the aggregate metrics of a report from its per-item records.
nlohmann::json reaggregate(const nlohmann::json& report);

} // namespace plm::eval
