#include "plm/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "plm/error.hpp"

namespace plm::metrics {
namespace {

void check_aligned(std::size_t n_preds, std::size_t n_gts)
{
    if (n_preds != n_gts)
        throw InvalidInput("predictions (" + std::to_string(n_preds) + ") and ground truths (" +
                           std::to_string(n_gts) + ") differ in length");
    if (n_gts == 0)
        throw InvalidInput("empty benchmark: no items to score");
}

} // namespace

std::vector<CaptionEvent> DenseCaptionTrack::visible_events() const
{
    std::vector<CaptionEvent> out;
    for (const auto& e : events)
        if (!e.out_of_frame)
            out.push_back(e);
    return out;
}

double interval_iou(const Interval& a, const Interval& b)
{
    if (a.unit != b.unit)
        throw InvalidInput("interval_iou: unit mismatch");
    const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
    const double uni = a.length() + b.length() - inter;
    if (!(uni > 0))
        return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double mean_recall_at_1(std::span<const std::optional<Interval>> preds, std::span<const Interval> gts,
                        std::span<const double> thresholds)
{
    check_aligned(preds.size(), gts.size());
    if (thresholds.empty())
        throw InvalidInput("mean_recall_at_1: no IoU thresholds");
    std::vector<double> ious(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i)
        ious[i] = preds[i] ? interval_iou(*preds[i], gts[i]) : 0.0;
    double sum = 0.0;
    for (double tau : thresholds) {
        const auto hits = std::count_if(ious.begin(), ious.end(), [tau](double v) { return v >= tau; });
        sum += static_cast<double>(hits) / static_cast<double>(ious.size());
    }
    return 100.0 * sum / static_cast<double>(thresholds.size());
}

double mean_iou(std::span<const std::optional<Interval>> preds, std::span<const Interval> gts)
{
    check_aligned(preds.size(), gts.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < gts.size(); ++i)
        sum += preds[i] ? interval_iou(*preds[i], gts[i]) : 0.0;
    return 100.0 * sum / static_cast<double>(gts.size());
}

double mbacc(std::span<const BinaryProbeResult> results)
{
    if (results.empty())
        throw InvalidInput("mbacc: no probe results");
    std::map<std::string, bool> all_correct;
    for (const auto& r : results) {
        auto [it, inserted] = all_correct.try_emplace(r.qa_id, r.correct);
        if (!inserted)
            it->second = it->second && r.correct;
    }
    const auto ok = std::count_if(all_correct.begin(), all_correct.end(), [](const auto& kv) { return kv.second; });
    return 100.0 * static_cast<double>(ok) / static_cast<double>(all_correct.size());
}

SodaResult soda(const DenseCaptionTrack& pred, const DenseCaptionTrack& gt, const SimilarityMatrix& sim)
{
    const auto pv = pred.visible_events();
    const auto gv = gt.visible_events();
    if (sim.p != pv.size() || sim.g != gv.size() || sim.s.size() != sim.p * sim.g)
        throw InvalidInput("similarity matrix is " + std::to_string(sim.p) + "x" + std::to_string(sim.g) +
                           ", expected " + std::to_string(pv.size()) + "x" + std::to_string(gv.size()));
    for (double v : sim.s)
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidInput("similarity entries must lie in [0,1]");

    SodaResult res;
    const std::size_t p = pv.size();
    const std::size_t g = gv.size();
    if (p == 0 || g == 0)
        return res;

    // dp[i][j]: best total using the first i predictions and first j truths.
    std::vector<double> dp((p + 1) * (g + 1), 0.0);
    std::vector<unsigned char> move((p + 1) * (g + 1), 0); // 1 = skip pred, 2 = skip gt, 3 = match
    auto at = [g](std::size_t i, std::size_t j) { return i * (g + 1) + j; };
    for (std::size_t i = 1; i <= p; ++i) {
        for (std::size_t j = 1; j <= g; ++j) {
            const double f = interval_iou(pv[i - 1].interval, gv[j - 1].interval) * sim.at(i - 1, j - 1);
            double best = dp[at(i - 1, j)];
            unsigned char m = 1;
            if (dp[at(i, j - 1)] > best) {
                best = dp[at(i, j - 1)];
                m = 2;
            }
            if (f > 0 && dp[at(i - 1, j - 1)] + f > best) {
                best = dp[at(i - 1, j - 1)] + f;
                m = 3;
            }
            dp[at(i, j)] = best;
            move[at(i, j)] = m;
        }
    }
    for (std::size_t i = p, j = g; i > 0 && j > 0;) {
        switch (move[at(i, j)]) {
        case 3:
            res.alignment.emplace_back(i - 1, j - 1);
            --i;
            --j;
            break;
        case 2:
            --j;
            break;
        default:
            --i;
            break;
        }
    }
    std::reverse(res.alignment.begin(), res.alignment.end());

    res.total = dp[at(p, g)];
    res.precision = res.total / static_cast<double>(p);
    res.recall = res.total / static_cast<double>(g);
    // 2PR/(P+R) simplifies to 2S/(p+g), which avoids two roundings.
    res.f1 = res.total > 0 ? 2.0 * res.total / static_cast<double>(p + g) : 0.0;
    return res;
}

JudgeAggregate judge_accuracy(std::span<const JudgeVerdict> verdicts)
{
    if (verdicts.empty())
        throw InvalidInput("judge_accuracy: no verdicts");
    double yes = 0;
    double score = 0;
    for (const auto& v : verdicts) {
        yes += v.pred == Verdict::yes ? 1.0 : 0.0;
        score += v.score;
    }
    const double n = static_cast<double>(verdicts.size());
    return {100.0 * yes / n, score / n};
}

double mean_caption_score(std::span<const double> scores_0_10)
{
    if (scores_0_10.empty())
        throw InvalidInput("mean_caption_score: no scores");
    double sum = 0;
    for (double s : scores_0_10)
        sum += 10.0 * s;
    return sum / static_cast<double>(scores_0_10.size());
}

} // namespace plm::metrics
