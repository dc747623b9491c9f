#include <doctest.h>

#include "gen.hpp"
#include "oracles.hpp"
#include "plm/error.hpp"
#include "plm/metrics.hpp"

using namespace plm::metrics;

namespace {

Interval iv(double a, double b)
{
    return {a, b, TimeUnit::frame_index};
}

CaptionEvent ev(double a, double b, std::string text = "x", bool oof = false)
{
    return {iv(a, b), std::move(text), oof};
}

DenseCaptionTrack track(std::vector<CaptionEvent> events, double horizon)
{
    return {"t", std::move(events), iv(0, horizon)};
}

} // namespace

TEST_CASE("interval iou: documented cases")
{
    CHECK(interval_iou(iv(10, 20), iv(10, 20)) == 1.0);
    CHECK(interval_iou(iv(0, 10), iv(20, 30)) == 0.0);
    CHECK(interval_iou(iv(0, 10), iv(5, 15)) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(interval_iou(iv(3, 3), iv(3, 3)) == 0.0);
    CHECK_THROWS_AS(interval_iou(iv(0, 1), Interval{0, 1, TimeUnit::seconds}), plm::InvalidInput);
}

TEST_CASE("interval iou matches the unit-grid oracle and is symmetric")
{
    gen::Rng r(1);
    for (int trial = 0; trial < 2000; ++trial) {
        long a0 = static_cast<long>(r.integer(0, 40)), a1 = static_cast<long>(r.integer(0, 40));
        long b0 = static_cast<long>(r.integer(0, 40)), b1 = static_cast<long>(r.integer(0, 40));
        if (a0 > a1)
            std::swap(a0, a1);
        if (b0 > b1)
            std::swap(b0, b1);
        const double v = interval_iou(iv(a0, a1), iv(b0, b1));
        CHECK(std::abs(v - oracle::iou_grid(a0, a1, b0, b1)) <= 1e-9);
        CHECK(v == interval_iou(iv(b0, b1), iv(a0, a1)));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mean recall@1: documented cases")
{
    std::vector<std::optional<Interval>> exact{iv(0, 5), iv(3, 9)};
    std::vector<Interval> gts{iv(0, 5), iv(3, 9)};
    CHECK(mean_recall_at_1(exact, gts) == 100.0);
    CHECK(mean_iou(exact, gts) == 100.0);

    std::vector<std::optional<Interval>> third{iv(0, 10)};
    std::vector<Interval> g1{iv(5, 15)};
    CHECK(mean_recall_at_1(third, g1) == 25.0);
    CHECK(mean_iou(third, g1) == doctest::Approx(100.0 / 3).epsilon(1e-14));

    std::vector<std::optional<Interval>> none{std::nullopt};
    CHECK(mean_recall_at_1(none, g1) == 0.0);

    CHECK_THROWS_AS(mean_recall_at_1(std::vector<std::optional<Interval>>{}, std::vector<Interval>{}), plm::InvalidInput);
    CHECK_THROWS_AS(mean_iou(std::vector<std::optional<Interval>>{}, std::vector<Interval>{}), plm::InvalidInput);
    CHECK_THROWS_AS(mean_recall_at_1(third, gts), plm::InvalidInput);
}

TEST_CASE("recall is non-increasing in each threshold and meanR <= R@0.3")
{
    gen::Rng r(2);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = static_cast<std::size_t>(r.integer(1, 20));
        std::vector<std::optional<Interval>> p;
        std::vector<Interval> g;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = r.real(0, 50), b = a + r.real(0, 20);
            g.push_back(iv(a, b));
            if (r.integer(0, 5) == 0)
                p.push_back(std::nullopt);
            else {
                const double c = r.real(0, 50);
                p.push_back(iv(c, c + r.real(0, 20)));
            }
        }
        double prev = 101;
        for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
            const double t[] = {tau};
            const double v = mean_recall_at_1(p, g, t);
            CHECK(v <= prev);
            prev = v;
        }
        const double t03[] = {0.3};
        CHECK(mean_recall_at_1(p, g) <= mean_recall_at_1(p, g, t03));
    }
}

TEST_CASE("mbacc: documented cases and oracle")
{
    CHECK(mbacc(std::vector<BinaryProbeResult>{{"q", 0, true}, {"q", 1, true}, {"q", 2, true}}) == 100.0);
    CHECK(mbacc(std::vector<BinaryProbeResult>{{"q", 0, true}, {"q", 1, true}, {"q", 2, false}}) == 0.0);
    std::vector<BinaryProbeResult> four{{"a", 0, true}, {"a", 1, true}, {"b", 0, false}, {"b", 1, true},
                                        {"c", 0, true}, {"d", 0, true}, {"d", 1, false}, {"d", 2, true}};
    CHECK(mbacc(four) == 50.0);

    gen::Rng r(3);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<BinaryProbeResult> t;
        const int n = static_cast<int>(r.integer(1, 30));
        for (int i = 0; i < n; ++i)
            t.push_back({"q" + std::to_string(r.integer(0, 8)), i, r.integer(0, 4) != 0});
        CHECK(mbacc(t) == oracle::mbacc(t));
    }
}

TEST_CASE("soda: documented cases")
{
    const auto one = track({ev(0, 10)}, 10);
    SimilarityMatrix s11{1, 1, {1.0}};
    CHECK(soda_f1(one, one, s11) == 1.0);

    const auto empty = track({ev(0, 10, "Out of frame", true)}, 10);
    SimilarityMatrix s01{0, 1, {}};
    CHECK(soda_f1(empty, one, s01) == 0.0);

    const auto two = track({ev(0, 5), ev(5, 10)}, 10);
    const auto p1 = track({ev(0, 5), ev(5, 10, "Out of frame", true)}, 10);
    SimilarityMatrix s12{1, 2, {1.0, 0.0}};
    const auto res = soda(p1, two, s12);
    CHECK(res.total == 1.0);
    CHECK(res.precision == 1.0);
    CHECK(res.recall == 0.5);
    CHECK(std::abs(res.f1 - 2.0 / 3.0) <= 1e-12);
    REQUIRE(res.alignment.size() == 1);
    CHECK(res.alignment[0] == std::pair<std::size_t, std::size_t>{0, 0});

    SimilarityMatrix bad{2, 2, {1, 1, 1, 1}};
    CHECK_THROWS_AS(soda(p1, two, bad), plm::InvalidInput);
}

TEST_CASE("soda: 1x1 equals tIoU * sim")
{
    gen::Rng r(4);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = r.real(0, 10), b = a + r.real(0.1, 10);
        const double c = r.real(0, 10), d = c + r.real(0.1, 10);
        const double s = r.real(0, 1);
        const auto p = track({ev(a, b)}, 30);
        const auto g = track({ev(c, d)}, 30);
        const double expect = interval_iou(iv(a, b), iv(c, d)) * s;
        CHECK(soda_f1(p, g, SimilarityMatrix{1, 1, {s}}) == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("soda: DP equals exhaustive search on small tracks")
{
    gen::Rng r(5);
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = oracle::random_track(r, 20, 6);
        const auto g = oracle::random_track(r, 20, 6);
        const auto sim = oracle::random_sim(r, p.visible_events().size(), g.visible_events().size());
        const auto res = soda(p, g, sim);
        const auto f = oracle::pair_scores(p, g, sim);
        CHECK(res.total == doctest::Approx(oracle::best_alignment_exhaustive(f)).epsilon(1e-12));
        CHECK(res.f1 >= 0.0);
        CHECK(res.f1 <= 1.0);
        // the reported alignment is monotonic and achieves the total
        double t = 0;
        for (std::size_t k = 0; k < res.alignment.size(); ++k) {
            t += f[res.alignment[k].first][res.alignment[k].second];
            if (k > 0) {
                CHECK(res.alignment[k].first > res.alignment[k - 1].first);
                CHECK(res.alignment[k].second > res.alignment[k - 1].second);
            }
        }
        CHECK(t == doctest::Approx(res.total).epsilon(1e-12));
    }
}

TEST_CASE("soda: raising a similarity on the optimal alignment never lowers F1")
{
    gen::Rng r(6);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = oracle::random_track(r, 30, 8);
        const auto g = oracle::random_track(r, 30, 8);
        auto sim = oracle::random_sim(r, p.visible_events().size(), g.visible_events().size());
        const auto base = soda(p, g, sim);
        if (base.alignment.empty())
            continue;
        const auto [i, j] = base.alignment[static_cast<std::size_t>(r.integer(0, static_cast<std::int64_t>(base.alignment.size()) - 1))];
        sim.at(i, j) = std::min(1.0, sim.at(i, j) + r.real(0, 1));
        CHECK(soda(p, g, sim).f1 >= base.f1 - 1e-15);
    }
}

TEST_CASE("judge aggregation")
{
    std::vector<JudgeVerdict> yes{{Verdict::yes, 5, "", false}, {Verdict::yes, 4, "", false}};
    CHECK(judge_accuracy(yes).accuracy == 100.0);
    CHECK(judge_accuracy(yes).mean_score == 4.5);
    std::vector<JudgeVerdict> mixed{{Verdict::yes, 5, "", false}, {Verdict::no, 1, "", false}};
    CHECK(judge_accuracy(mixed).accuracy == 50.0);
    CHECK_THROWS_AS(judge_accuracy(std::vector<JudgeVerdict>{}), plm::InvalidInput);
    CHECK(mean_caption_score(std::vector<double>{8, 6}) == 70.0);
    CHECK_THROWS_AS(mean_caption_score(std::vector<double>{}), plm::InvalidInput);
}
