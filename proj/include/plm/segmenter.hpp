#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plm::segmenter {

/// Per-sample embedding sequence of one video. Vectors are unit-normalised by
/// make_feature_series(); every consumer assumes that has happened.
struct FeatureSeries {
    std::string video_id;
    double stride_s = 1.0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> vectors;

    double duration_s() const { return stride_s * static_cast<double>(vectors.size()); }
};

struct ShotBoundaryList {
    std::string video_id;
    std::vector<double> times_s;
};

struct SegmentProposal {
    std::string video_id;
    double start_s = 0.0;
    double end_s = 0.0;
    double boundary_score = 0.0;
    std::map<std::string, double> scores;
    std::optional<std::string> label;

    double duration_s() const { return end_s - start_s; }
    bool operator==(const SegmentProposal&) const = default;
};

struct SegmenterConfig {
    int w = 5;
    double theta_b = 0.2;
    double min_sep_s = 2.0;
    double target_dur_s = 10.0;
    double max_dur_s = 30.0;
    double snap_tol_s = 1.0;
};

// Validates shape and stride, then L2-normalises each vector. Throws
// InvalidInput on ragged or zero-norm vectors.
FeatureSeries make_feature_series(std::string video_id, double stride_s,
                                  std::vector<std::vector<double>> vectors);

void validate_shots(const ShotBoundaryList& shots);

/// Block-contrast boundary statistic. For interior index t with a complete
/// window, score(t) = mean similarity inside A=[t-w,t) and B=[t,t+w) minus the
/// mean similarity across A x B. Incomplete windows score 0.
std::vector<double> boundary_scores(const FeatureSeries& fs, int half_width_w);

/// Strict local maxima above threshold with greedy non-maximum suppression.
/// Returned times are index * stride_s, ascending.
std::vector<double> detect_boundaries(std::span<const double> scores, double threshold_b,
                                      double min_separation_s, double stride_s);

// Splits [0, duration] at the given interior boundary times.
std::vector<SegmentProposal> segments_from_boundaries(const FeatureSeries& fs,
                                                      std::span<const double> boundaries,
                                                      std::span<const double> scores);

/// Greedy agglomeration of adjacent segments by mean-feature similarity until
/// the mean duration reaches target_duration_s. Merges that would exceed
/// max_duration_s are never taken.
std::vector<SegmentProposal> merge_to_duration_prior(std::vector<SegmentProposal> segments,
                                                     const FeatureSeries& fs,
                                                     double target_duration_s = 10.0,
                                                     double max_duration_s = 30.0);

/// Moves segment endpoints onto nearby shot boundaries. Shared endpoints of
/// contiguous segments move together. Candidate snaps are applied closest
/// first; a snap that would empty a segment or cross a neighbouring endpoint
/// is skipped. With pin_span_ends the first start and last end never move.
std::vector<SegmentProposal> snap_to_shots(std::vector<SegmentProposal> segments,
                                           const ShotBoundaryList& shots, double tol_s = 1.0,
                                           bool pin_span_ends = false);

std::vector<SegmentProposal> propose_segments(const FeatureSeries& fs,
                                              const ShotBoundaryList& shots,
                                              const SegmenterConfig& cfg);

} // namespace plm::segmenter
