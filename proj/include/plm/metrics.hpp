#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plm::metrics {

enum class TimeUnit { seconds, frame_index };

struct Interval {
    double start = 0;
    double end = 0;
    TimeUnit unit = TimeUnit::frame_index;

    double length() const { return end - start; }
    bool operator==(const Interval&) const = default;
};

struct BinaryProbeResult {
    std::string qa_id;
    int probe_index = 0;
    bool correct = false;
};

struct CaptionEvent {
    Interval interval;
    std::string text;
    bool out_of_frame = false;

    bool operator==(const CaptionEvent&) const = default;
};

/// Ordered, gap-free event list over a horizon. Out-of-frame spans are
/// explicit events with the flag set.
struct DenseCaptionTrack {
    std::string track_id;
    std::vector<CaptionEvent> events;
    Interval horizon;

    std::vector<CaptionEvent> visible_events() const;
    bool operator==(const DenseCaptionTrack&) const = default;
};

/// Row-major p x g similarity matrix with entries in [0,1].
struct SimilarityMatrix {
    std::size_t p = 0;
    std::size_t g = 0;
    std::vector<double> s;

    double at(std::size_t i, std::size_t j) const { return s[i * g + j]; }
    double& at(std::size_t i, std::size_t j) { return s[i * g + j]; }
};

inline const std::vector<double> kDefaultIouThresholds{0.3, 0.5, 0.7, 0.9};

double interval_iou(const Interval& a, const Interval& b);

/// Mean over thresholds of recall@1, in percent. A missing prediction counts
/// as IoU 0.
double mean_recall_at_1(std::span<const std::optional<Interval>> preds, std::span<const Interval> gts,
                        std::span<const double> thresholds = kDefaultIouThresholds);

/// Mean IoU in percent; missing predictions count 0.
double mean_iou(std::span<const std::optional<Interval>> preds, std::span<const Interval> gts);

/// Percent of questions whose probes are all correct.
double mbacc(std::span<const BinaryProbeResult> results);

struct SodaResult {
    double total = 0; // S: best monotonic alignment score
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::vector<std::pair<std::size_t, std::size_t>> alignment;
};

/// SODA-style F-measure over the visible events of both tracks. Pair score is
/// tIoU x sim; the best order-preserving one-to-one alignment is found by DP.
/// `sim` is indexed by visible prediction x visible ground-truth event.
SodaResult soda(const DenseCaptionTrack& pred, const DenseCaptionTrack& gt, const SimilarityMatrix& sim);

inline double soda_f1(const DenseCaptionTrack& pred, const DenseCaptionTrack& gt, const SimilarityMatrix& sim)
{
    return soda(pred, gt, sim).f1;
}

enum class Verdict { yes, no };

struct JudgeVerdict {
    Verdict pred = Verdict::no;
    double score = 0;
    std::string raw;
    bool parse_failure = false;
};

struct JudgeAggregate {
    double accuracy = 0;   // percent of yes verdicts
    double mean_score = 0; // on the verdicts' native scale
};

JudgeAggregate judge_accuracy(std::span<const JudgeVerdict> verdicts);

/// Mean of 0-10 caption scores rescaled to 0-100.
double mean_caption_score(std::span<const double> scores_0_10);

} // namespace plm::metrics
