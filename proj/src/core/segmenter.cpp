#include "plm/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plm/error.hpp"

namespace plm::segmenter {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool same_time(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

std::size_t to_index(double t, double stride)
{
    const double i = std::round(t / stride);
    return i <= 0.0 ? 0 : static_cast<std::size_t>(i);
}

// Re-normalised mean of the feature vectors covering [start, end).
std::vector<double> mean_feature(const FeatureSeries& fs, double start_s, double end_s)
{
    std::size_t lo = std::min(to_index(start_s, fs.stride_s), fs.vectors.size());
    std::size_t hi = std::min(to_index(end_s, fs.stride_s), fs.vectors.size());
    if (hi <= lo) {
        // Sub-sample segment: use the sample it falls in.
        lo = std::min(lo, fs.vectors.size() - 1);
        hi = lo + 1;
    }
    std::vector<double> m(fs.dim, 0.0);
    for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t d = 0; d < fs.dim; ++d)
            m[d] += fs.vectors[i][d];
    const double n = std::sqrt(dot(m, m));
    if (n > 0)
        for (double& v : m)
            v /= n;
    return m;
}

void check_sorted_disjoint(const std::vector<SegmentProposal>& segs)
{
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (!(segs[i].start_s < segs[i].end_s) || segs[i].start_s < 0)
            throw InvalidInput("segment " + std::to_string(i) + " has invalid bounds");
        if (i > 0 && segs[i].start_s < segs[i - 1].end_s && !same_time(segs[i].start_s, segs[i - 1].end_s))
            throw InvalidInput("segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                               " overlap or are unsorted");
    }
}

} // namespace

FeatureSeries make_feature_series(std::string video_id, double stride_s,
                                  std::vector<std::vector<double>> vectors)
{
    if (!(stride_s > 0) || !std::isfinite(stride_s))
        throw InvalidInput("stride_s must be positive");
    if (vectors.empty())
        throw InvalidInput("feature series for '" + video_id + "' is empty");
    const std::size_t dim = vectors.front().size();
    if (dim == 0)
        throw InvalidInput("feature vectors must have dim >= 1");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        auto& v = vectors[i];
        if (v.size() != dim)
            throw InvalidInput("vector " + std::to_string(i) + " has length " + std::to_string(v.size()) +
                               ", expected " + std::to_string(dim));
        const double n = std::sqrt(dot(v, v));
        if (!(n > 0) || !std::isfinite(n))
            throw InvalidInput("vector " + std::to_string(i) + " has zero or non-finite norm");
        for (double& x : v)
            x /= n;
    }
    return FeatureSeries{std::move(video_id), stride_s, dim, std::move(vectors)};
}

void validate_shots(const ShotBoundaryList& shots)
{
    for (std::size_t i = 0; i < shots.times_s.size(); ++i) {
        if (!std::isfinite(shots.times_s[i]) || shots.times_s[i] < 0)
            throw InvalidInput("shot time " + std::to_string(i) + " is negative or non-finite");
        if (i > 0 && !(shots.times_s[i] > shots.times_s[i - 1]))
            throw InvalidInput("shot times must be strictly increasing (index " + std::to_string(i) + ")");
    }
}

std::vector<double> boundary_scores(const FeatureSeries& fs, int half_width_w)
{
    if (half_width_w < 1)
        throw InvalidInput("half-width w must be >= 1");
    const std::size_t w = static_cast<std::size_t>(half_width_w);
    const std::size_t n = fs.vectors.size();
    if (n < 2 * w)
        throw InvalidInput("feature series has " + std::to_string(n) + " samples; boundary kernel with w=" +
                           std::to_string(w) + " needs at least " + std::to_string(2 * w));

    std::vector<double> out(n, 0.0);
    const double w2 = static_cast<double>(w * w);
    for (std::size_t t = w; t + w <= n; ++t) {
        double within = 0.0;
        double cross = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            const auto& a_i = fs.vectors[t - w + i];
            const auto& b_i = fs.vectors[t + i];
            for (std::size_t j = 0; j < w; ++j) {
                within += dot(a_i, fs.vectors[t - w + j]);
                within += dot(b_i, fs.vectors[t + j]);
                cross += dot(a_i, fs.vectors[t + j]);
            }
        }
        out[t] = within / (2.0 * w2) - cross / w2;
    }
    return out;
}

std::vector<double> detect_boundaries(std::span<const double> scores, double threshold_b,
                                      double min_separation_s, double stride_s)
{
    if (!std::isfinite(threshold_b))
        throw InvalidInput("threshold_b must be finite");
    if (!(min_separation_s >= 0))
        throw InvalidInput("min_separation_s must be >= 0");
    if (!(stride_s > 0))
        throw InvalidInput("stride_s must be positive");

    struct Peak {
        std::size_t index;
        double score;
    };
    std::vector<Peak> peaks;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = scores[i];
        if (!(s > threshold_b))
            continue;
        if (i > 0 && !(s > scores[i - 1]))
            continue;
        if (i + 1 < scores.size() && !(s > scores[i + 1]))
            continue;
        peaks.push_back({i, s});
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });

    std::vector<std::size_t> kept;
    for (const auto& p : peaks) {
        const double t = static_cast<double>(p.index) * stride_s;
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return std::abs(static_cast<double>(k) * stride_s - t) < min_separation_s;
        });
        if (!clash)
            kept.push_back(p.index);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<double> times;
    times.reserve(kept.size());
    for (std::size_t k : kept)
        times.push_back(static_cast<double>(k) * stride_s);
    return times;
}

std::vector<SegmentProposal> segments_from_boundaries(const FeatureSeries& fs,
                                                      std::span<const double> boundaries,
                                                      std::span<const double> scores)
{
    const double end = fs.duration_s();
    std::vector<double> cuts{0.0};
    for (double b : boundaries)
        if (b > cuts.back() && b < end && !same_time(b, end) && !same_time(b, cuts.back()))
            cuts.push_back(b);
    cuts.push_back(end);

    std::vector<SegmentProposal> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        SegmentProposal s;
        s.video_id = fs.video_id;
        s.start_s = cuts[i];
        s.end_s = cuts[i + 1];
        const std::size_t idx = to_index(cuts[i], fs.stride_s);
        s.boundary_score = (i > 0 && idx < scores.size()) ? scores[idx] : 0.0;
        segs.push_back(std::move(s));
    }
    return segs;
}

std::vector<SegmentProposal> merge_to_duration_prior(std::vector<SegmentProposal> segments,
                                                     const FeatureSeries& fs, double target_duration_s,
                                                     double max_duration_s)
{
    if (segments.size() <= 1)
        return segments;
    check_sorted_disjoint(segments);
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (!same_time(segments[i].start_s, segments[i - 1].end_s))
            throw InvalidInput("segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                               " are not contiguous");

    const double span = segments.back().end_s - segments.front().start_s;
    std::vector<std::vector<double>> means;
    means.reserve(segments.size());
    for (const auto& s : segments)
        means.push_back(mean_feature(fs, s.start_s, s.end_s));

    while (segments.size() > 1 && span / static_cast<double>(segments.size()) < target_duration_s) {
        std::size_t best = segments.size();
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
            if (segments[i + 1].end_s - segments[i].start_s > max_duration_s)
                continue;
            const double sim = dot(means[i], means[i + 1]);
            if (sim > best_sim) {
                best_sim = sim;
                best = i;
            }
        }
        if (best == segments.size())
            break;
        segments[best].end_s = segments[best + 1].end_s;
        segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(best) + 1);
        means.erase(means.begin() + static_cast<std::ptrdiff_t>(best) + 1);
        means[best] = mean_feature(fs, segments[best].start_s, segments[best].end_s);
    }
    return segments;
}

std::vector<SegmentProposal> snap_to_shots(std::vector<SegmentProposal> segments,
                                           const ShotBoundaryList& shots, double tol_s, bool pin_span_ends)
{
    if (segments.empty() || shots.times_s.empty())
        return segments;
    check_sorted_disjoint(segments);

    // Joints: distinct endpoint positions, shared by touching segments.
    std::vector<double> joints;
    std::vector<std::size_t> start_joint(segments.size());
    std::vector<std::size_t> end_joint(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (joints.empty() || !same_time(joints.back(), segments[i].start_s))
            joints.push_back(segments[i].start_s);
        start_joint[i] = joints.size() - 1;
        joints.push_back(segments[i].end_s);
        end_joint[i] = joints.size() - 1;
    }

    struct Candidate {
        std::size_t joint;
        double target;
        double distance;
    };
    std::vector<Candidate> cands;
    for (std::size_t j = 0; j < joints.size(); ++j) {
        if (pin_span_ends && (j == 0 || j + 1 == joints.size()))
            continue;
        double best_t = 0.0;
        double best_d = std::numeric_limits<double>::infinity();
        for (double s : shots.times_s) {
            const double d = std::abs(s - joints[j]);
            if (d < best_d) { // earlier shot wins ties: times are ascending
                best_d = d;
                best_t = s;
            }
        }
        if (best_d <= tol_s && best_d > 0)
            cands.push_back({j, best_t, best_d});
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.distance != b.distance)
            return a.distance < b.distance;
        return joints[a.joint] < joints[b.joint];
    });

    for (const auto& c : cands) {
        const std::size_t j = c.joint;
        const bool above_prev = j == 0 || c.target > joints[j - 1];
        const bool below_next = j + 1 == joints.size() || c.target < joints[j + 1];
        if (above_prev && below_next)
            joints[j] = c.target;
    }

    for (std::size_t i = 0; i < segments.size(); ++i) {
        segments[i].start_s = joints[start_joint[i]];
        segments[i].end_s = joints[end_joint[i]];
    }
    return segments;
}

std::vector<SegmentProposal> propose_segments(const FeatureSeries& fs, const ShotBoundaryList& shots,
                                              const SegmenterConfig& cfg)
{
    validate_shots(shots);
    const auto scores = boundary_scores(fs, cfg.w);
    const auto bounds = detect_boundaries(scores, cfg.theta_b, cfg.min_sep_s, fs.stride_s);
    auto segs = segments_from_boundaries(fs, bounds, scores);
    segs = merge_to_duration_prior(std::move(segs), fs, cfg.target_dur_s, cfg.max_dur_s);
    return snap_to_shots(std::move(segs), shots, cfg.snap_tol_s, /*pin_span_ends=*/true);
}

} // namespace plm::segmenter
