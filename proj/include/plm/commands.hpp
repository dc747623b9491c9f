#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plm/dataset.hpp"
#include "plm/judge.hpp"
#include "plm/segmenter.hpp"

// File-level entry points behind each CLI subcommand. Every output file is
// written atomically and depends only on the inputs and explicit seeds.
namespace plm::commands {

/// features.jsonl + shots.jsonl -> segments.jsonl. Videos without a shots
/// record are segmented without snapping. Returns the number of segments.
std::size_t segment(const std::string& features_path, const std::string& shots_path,
                    const segmenter::SegmenterConfig& cfg, const std::string& out_path);

struct RankSummary {
    std::size_t total = 0;
    std::size_t kept = 0;
};

/// Filters segments by evidence. Evidence is matched on (video_id, start_s,
/// end_s); unmatched segments are reported as evidence errors.
RankSummary rank(const std::string& segments_path, const std::string& evidence_path,
                 const std::map<std::string, double>& thresholds, const std::string& model_path,
                 const std::string& out_segments, const std::string& out_report);

/// runpoints.csv -> out_dir/scaling_report.json plus one SVG per group.
void scaling_fit(const std::string& csv_path, const std::string& out_dir, bool fit_all_points,
                 const std::map<std::string, double>& baselines);

std::size_t mcq_expand(const std::string& in_path, const std::string& out_path, std::uint64_t seed);

struct FilterSummary {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::size_t flagged = 0;
};

/// Blind filter; report_path gets one record per item with its status.
FilterSummary mcq_filter(const std::string& in_path, const std::string& out_path, const std::string& report_path,
                         judge::ChatClient& text_only_client);

std::size_t mcq_balance(const std::string& in_path, const std::string& out_path, std::uint64_t seed, double slack);

/// Reads {frames_dir}/{video_id}/{idx:05}.png (or .ppm), samples k frames per
/// video, draws its tracks and writes {out_dir}/{video_id}/{idx:05}.png using
/// the original frame indices. Returns the number of frames written.
std::size_t overlay(const std::string& frames_dir, const std::string& tracks_path, const std::string& out_dir,
                    std::int64_t k, int thickness_px);

} // namespace plm::commands
