#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plm/segmenter.hpp"

namespace plm::ranker {

/// Precomputed per-segment evidence from the external detectors. Absent
/// fields mean the detector was not run for this segment.
struct SegmentEvidence {
    std::optional<double> asd_fraction;
    std::optional<std::vector<double>> hand_confidences;
    std::optional<double> hoi_frame_fraction;
    std::optional<std::vector<double>> asr_alignment_scores;
    std::optional<std::vector<double>> pooled_feature;
};

/// Two-layer MLP relevance classifier (inference only).
class RelevanceModel {
public:
    RelevanceModel(std::size_t d, std::size_t h, std::vector<double> w1_row_major, std::vector<double> b1,
                   std::vector<double> w2, double b2);

    std::size_t input_dim() const { return d_; }
    std::size_t hidden_dim() const { return h_; }

    // sigmoid(w2 . relu(W1 x + b1) + b2)
    double score(std::span<const double> pooled) const;

private:
    std::size_t d_;
    std::size_t h_;
    std::vector<double> w1_;
    std::vector<double> b1_;
    std::vector<double> w2_;
    double b2_;
};

/// Mean of the scores strictly above threshold, 0 when none qualify.
double asr_groundability(std::span<const double> scores, double threshold = 0.5);

/// hoi_frame_fraction x mean(hand_confidences); 0 with no hands.
double hoi_score(const SegmentEvidence& ev);

double relevance_score(const RelevanceModel& model, std::span<const double> pooled);

struct Thresholds {
    std::optional<double> asd_max;
    std::optional<double> hoi_min;
    std::optional<double> asr_min;
    std::optional<double> relevance_min;

    // Keys outside {asd_max, hoi_min, asr_min, relevance_min} are rejected.
    static Thresholds from_map(const std::map<std::string, double>& m);
};

struct RankRecord {
    std::string video_id;
    double start_s = 0;
    double end_s = 0;
    std::map<std::string, double> scores;
    bool kept = false;
    std::string reason; // failing criterion name, empty when kept
    std::string error;  // evidence problem, empty when none
};

struct FilterResult {
    std::vector<segmenter::SegmentProposal> kept;
    std::vector<RankRecord> report;
};

struct RankItem {
    segmenter::SegmentProposal segment;
    std::optional<SegmentEvidence> evidence;
};

/// Gate-style filter: ASD is an upper bound, every other score a lower bound.
/// Kept proposals carry their computed scores in SegmentProposal::scores.
FilterResult filter_segments(std::span<const RankItem> items, const Thresholds& thresholds,
                             const RelevanceModel* relevance);

} // namespace plm::ranker
