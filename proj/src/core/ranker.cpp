#include "plm/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plm/error.hpp"

namespace plm::ranker {
namespace {

void check_unit(std::span<const double> xs, const char* what)
{
    for (double x : xs)
        if (!(x >= 0.0 && x <= 1.0))
            throw InvalidInput(std::string(what) + " value " + std::to_string(x) + " is outside [0,1]");
}

// Clamped so large logits stay strictly inside (0,1).
double sigmoid(double z)
{
    double s;
    if (z >= 0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

} // namespace

RelevanceModel::RelevanceModel(std::size_t d, std::size_t h, std::vector<double> w1_row_major,
                               std::vector<double> b1, std::vector<double> w2, double b2)
    : d_(d), h_(h), w1_(std::move(w1_row_major)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2)
{
    if (d_ == 0 || h_ == 0)
        throw InvalidInput("relevance model dims must be positive");
    if (w1_.size() != d_ * h_)
        throw InvalidInput("W1 has " + std::to_string(w1_.size()) + " entries, expected h*d = " +
                           std::to_string(d_ * h_));
    if (b1_.size() != h_ || w2_.size() != h_)
        throw InvalidInput("b1 and w2 must have length h = " + std::to_string(h_));
    auto finite = [](double x) { return std::isfinite(x); };
    if (!std::all_of(w1_.begin(), w1_.end(), finite) || !std::all_of(b1_.begin(), b1_.end(), finite) ||
        !std::all_of(w2_.begin(), w2_.end(), finite) || !std::isfinite(b2_))
        throw InvalidInput("relevance model weights must be finite");
}

double RelevanceModel::score(std::span<const double> pooled) const
{
    if (pooled.size() != d_)
        throw InvalidInput("pooled feature has dim " + std::to_string(pooled.size()) + ", model expects " +
                           std::to_string(d_));
    double z = b2_;
    for (std::size_t k = 0; k < h_; ++k) {
        double a = b1_[k];
        for (std::size_t j = 0; j < d_; ++j)
            a += w1_[k * d_ + j] * pooled[j];
        z += w2_[k] * std::max(0.0, a);
    }
    return sigmoid(z);
}

double asr_groundability(std::span<const double> scores, double threshold)
{
    check_unit(scores, "ASR alignment score");
    double sum = 0.0;
    std::size_t n = 0;
    for (double s : scores)
        if (s > threshold) {
            sum += s;
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double hoi_score(const SegmentEvidence& ev)
{
    if (!ev.hand_confidences || ev.hand_confidences->empty())
        return 0.0;
    check_unit(*ev.hand_confidences, "hand confidence");
    const double frac = ev.hoi_frame_fraction.value_or(0.0);
    if (!(frac >= 0.0 && frac <= 1.0))
        throw InvalidInput("hoi_frame_fraction is outside [0,1]");
    const auto& h = *ev.hand_confidences;
    return frac * (std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size()));
}

double relevance_score(const RelevanceModel& model, std::span<const double> pooled)
{
    return model.score(pooled);
}

Thresholds Thresholds::from_map(const std::map<std::string, double>& m)
{
    Thresholds t;
    for (const auto& [k, v] : m) {
        if (!std::isfinite(v))
            throw InvalidInput("threshold '" + k + "' must be finite");
        if (k == "asd_max")
            t.asd_max = v;
        else if (k == "hoi_min")
            t.hoi_min = v;
        else if (k == "asr_min")
            t.asr_min = v;
        else if (k == "relevance_min")
            t.relevance_min = v;
        else
            throw InvalidInput("unknown threshold '" + k + "'");
    }
    return t;
}

FilterResult filter_segments(std::span<const RankItem> items, const Thresholds& th,
                             const RelevanceModel* relevance)
{
    if (relevance && !th.relevance_min)
        throw InvalidInput("a relevance model was supplied without a relevance_min threshold");

    FilterResult out;
    for (const auto& item : items) {
        RankRecord rec;
        rec.video_id = item.segment.video_id;
        rec.start_s = item.segment.start_s;
        rec.end_s = item.segment.end_s;

        auto fail = [&](const char* reason) {
            if (rec.reason.empty())
                rec.reason = reason;
        };
        try {
            if (!item.evidence) {
                if (th.asd_max || th.hoi_min || th.asr_min || relevance)
                    throw InvalidInput("no evidence record for segment");
            } else {
                const auto& ev = *item.evidence;
                if (th.asd_max) {
                    if (!ev.asd_fraction)
                        throw InvalidInput("asd_fraction required by asd_max");
                    if (!(*ev.asd_fraction >= 0.0 && *ev.asd_fraction <= 1.0))
                        throw InvalidInput("asd_fraction is outside [0,1]");
                    rec.scores["asd"] = *ev.asd_fraction;
                    if (*ev.asd_fraction > *th.asd_max)
                        fail("asd_max");
                }
                if (th.hoi_min) {
                    if (!ev.hoi_frame_fraction && ev.hand_confidences && !ev.hand_confidences->empty())
                        throw InvalidInput("hoi_frame_fraction required by hoi_min");
                    if (!ev.hand_confidences && !ev.hoi_frame_fraction)
                        throw InvalidInput("hand evidence required by hoi_min");
                    const double h = hoi_score(ev);
                    rec.scores["hoi"] = h;
                    if (h < *th.hoi_min)
                        fail("hoi_min");
                }
                if (th.asr_min) {
                    if (!ev.asr_alignment_scores)
                        throw InvalidInput("asr_alignment_scores required by asr_min");
                    const double a = asr_groundability(*ev.asr_alignment_scores);
                    rec.scores["asr"] = a;
                    if (a < *th.asr_min)
                        fail("asr_min");
                }
                if (relevance) {
                    if (!ev.pooled_feature)
                        throw InvalidInput("pooled_feature required by relevance model");
                    const double r = relevance->score(*ev.pooled_feature);
                    rec.scores["relevance"] = r;
                    if (r < *th.relevance_min)
                        fail("relevance_min");
                }
            }
        } catch (const InvalidInput& e) {
            rec.error = e.what();
            rec.reason = "evidence_error";
            rec.kept = false;
            out.report.push_back(std::move(rec));
            continue;
        }

        rec.kept = rec.reason.empty();
        if (rec.kept) {
            auto seg = item.segment;
            for (const auto& [k, v] : rec.scores)
                seg.scores[k] = v;
            out.kept.push_back(std::move(seg));
        }
        out.report.push_back(std::move(rec));
    }
    return out;
}

} // namespace plm::ranker
