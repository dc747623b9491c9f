#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "plm/error.hpp"
#include "plm/ranker.hpp"

using namespace plm::ranker;

namespace {

RankItem item(double start, std::optional<SegmentEvidence> ev)
{
    RankItem it;
    it.segment.video_id = "v";
    it.segment.start_s = start;
    it.segment.end_s = start + 5;
    it.evidence = std::move(ev);
    return it;
}

} // namespace

TEST_CASE("asr groundability")
{
    CHECK(asr_groundability(std::vector<double>{}) == 0.0);
    CHECK(asr_groundability(std::vector<double>{0.6, 0.4, 0.8}) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(asr_groundability(std::vector<double>{0.5, 0.5}) == 0.0);
    CHECK_THROWS_AS(asr_groundability(std::vector<double>{1.2}), plm::InvalidInput);
    CHECK_THROWS_AS(asr_groundability(std::vector<double>{-0.1}), plm::InvalidInput);
}

TEST_CASE("hoi score")
{
    SegmentEvidence ev;
    CHECK(hoi_score(ev) == 0.0);
    ev.hoi_frame_fraction = 0.5;
    ev.hand_confidences = std::vector<double>{0.8, 0.6};
    CHECK(hoi_score(ev) == doctest::Approx(0.35).epsilon(1e-15));
    ev.hoi_frame_fraction = 1.0;
    ev.hand_confidences = std::vector<double>{1.0};
    CHECK(hoi_score(ev) == 1.0);
    ev.hand_confidences = std::vector<double>{};
    CHECK(hoi_score(ev) == 0.0);
}

TEST_CASE("relevance model")
{
    RelevanceModel zero(3, 2, std::vector<double>(6, 0.0), {0, 0}, {0, 0}, 0.0);
    CHECK(zero.score(std::vector<double>{1, 2, 3}) == 0.5);

    RelevanceModel m(1, 1, {1.0}, {0.0}, {1.0}, 0.0);
    CHECK(relevance_score(m, std::vector<double>{-3.0}) == 0.5);
    CHECK(relevance_score(m, std::vector<double>{2.0}) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(relevance_score(m, std::vector<double>{2.0}) == doctest::Approx(0.8808).epsilon(1e-4));

    try {
        m.score(std::vector<double>{1, 2});
        FAIL("expected a dimension error");
    } catch (const plm::InvalidInput& e) {
        const std::string msg = e.what();
        CHECK(msg.find('1') != std::string::npos);
        CHECK(msg.find('2') != std::string::npos);
    }
    CHECK_THROWS_AS(RelevanceModel(2, 2, {1, 2, 3}, {0, 0}, {0, 0}, 0), plm::InvalidInput);
    CHECK_THROWS_AS(RelevanceModel(1, 1, {NAN}, {0}, {0}, 0), plm::InvalidInput);
}

TEST_CASE("relevance stays inside (0,1) for extreme activations")
{
    gen::Rng r(9);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = static_cast<std::size_t>(r.integer(1, 5));
        const std::size_t h = static_cast<std::size_t>(r.integer(1, 5));
        std::vector<double> w1(d * h), b1(h), w2(h), x(d);
        for (auto& v : w1)
            v = r.normal() * 10;
        for (auto& v : b1)
            v = r.normal();
        for (auto& v : w2)
            v = r.normal() * 10;
        for (auto& v : x)
            v = r.normal() * 5;
        RelevanceModel m(d, h, w1, b1, w2, r.normal());
        const double s = m.score(x);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
        // scaling w2 up pushes the output further from 0.5 in the same direction
        auto w2b = w2;
        for (auto& v : w2b)
            v *= 2;
        RelevanceModel m2(d, h, w1, b1, w2b, 0.0);
        RelevanceModel m1(d, h, w1, b1, w2, 0.0);
        const double s1 = m1.score(x), s2 = m2.score(x);
        if (s1 > 0.5)
            CHECK(s2 >= s1);
        else if (s1 < 0.5)
            CHECK(s2 <= s1);
    }
}

TEST_CASE("thresholds reject unknown names")
{
    CHECK_THROWS_AS(Thresholds::from_map({{"asd_min", 0.1}}), plm::InvalidInput);
    const auto t = Thresholds::from_map({{"asd_max", 0.3}, {"hoi_min", 0.1}});
    CHECK(*t.asd_max == 0.3);
    CHECK(!t.asr_min);
}

TEST_CASE("filter: documented cases")
{
    SegmentEvidence talking;
    talking.asd_fraction = 0.9;
    SegmentEvidence handsy;
    handsy.hoi_frame_fraction = 0.5;
    handsy.hand_confidences = std::vector<double>{0.8, 0.6};
    handsy.asr_alignment_scores = std::vector<double>{0.6, 0.8};

    std::vector<RankItem> items{item(0, talking), item(5, handsy), item(10, std::nullopt)};
    auto all = filter_segments(items, {}, nullptr);
    CHECK(all.kept.size() == 3);

    auto asd = filter_segments(std::vector<RankItem>{item(0, talking)}, Thresholds::from_map({{"asd_max", 0.3}}), nullptr);
    CHECK(asd.kept.empty());
    CHECK(asd.report[0].reason == "asd_max");
    CHECK(asd.report[0].scores.at("asd") == 0.9);

    auto both = filter_segments(std::vector<RankItem>{item(5, handsy)},
                                Thresholds::from_map({{"hoi_min", 0.3}, {"asr_min", 0.5}}), nullptr);
    REQUIRE(both.kept.size() == 1);
    CHECK(both.kept[0].scores.at("hoi") == doctest::Approx(0.35));
    CHECK(both.kept[0].scores.at("asr") == doctest::Approx(0.7));
    CHECK(both.report[0].kept);
}

TEST_CASE("filter: missing evidence is recorded and the run continues")
{
    SegmentEvidence no_asr;
    no_asr.asd_fraction = 0.1;
    SegmentEvidence ok;
    ok.asd_fraction = 0.1;
    ok.asr_alignment_scores = std::vector<double>{0.9};
    std::vector<RankItem> items{item(0, no_asr), item(5, std::nullopt), item(10, ok)};
    const auto r = filter_segments(items, Thresholds::from_map({{"asr_min", 0.5}}), nullptr);
    REQUIRE(r.report.size() == 3);
    CHECK(r.report[0].reason == "evidence_error");
    CHECK(!r.report[0].error.empty());
    CHECK(r.report[1].reason == "evidence_error");
    CHECK(r.report[2].kept);
    CHECK(r.kept.size() == 1);
}

TEST_CASE("filter: relevance gate")
{
    RelevanceModel m(1, 1, {1.0}, {0.0}, {1.0}, 0.0);
    SegmentEvidence lo, hi;
    lo.pooled_feature = std::vector<double>{-3.0};
    hi.pooled_feature = std::vector<double>{2.0};
    std::vector<RankItem> items{item(0, lo), item(5, hi)};
    const auto r = filter_segments(items, Thresholds::from_map({{"relevance_min", 0.6}}), &m);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].start_s == 5);
    CHECK(r.report[0].reason == "relevance_min");
    CHECK_THROWS_AS(filter_segments(items, {}, &m), plm::InvalidInput);
}

TEST_CASE("filter: subset, order preserving and idempotent")
{
    gen::Rng r(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<RankItem> items;
        const int n = static_cast<int>(r.integer(0, 20));
        for (int i = 0; i < n; ++i) {
            SegmentEvidence ev;
            ev.asd_fraction = r.real(0, 1);
            ev.hoi_frame_fraction = r.real(0, 1);
            ev.hand_confidences = std::vector<double>{r.real(0, 1), r.real(0, 1)};
            ev.asr_alignment_scores = std::vector<double>{r.real(0, 1), r.real(0, 1), r.real(0, 1)};
            items.push_back(item(5.0 * i, ev));
        }
        const auto th = Thresholds::from_map({{"asd_max", r.real(0, 1)}, {"hoi_min", r.real(0, 0.5)}, {"asr_min", r.real(0, 1)}});
        const auto first = filter_segments(items, th, nullptr);
        std::vector<RankItem> again;
        std::size_t j = 0;
        for (const auto& it : items) {
            if (j < first.kept.size() && first.kept[j].start_s == it.segment.start_s) {
                again.push_back(item(it.segment.start_s, it.evidence));
                ++j;
            }
        }
        CHECK(j == first.kept.size()); // kept list is an ordered subsequence
        const auto second = filter_segments(again, th, nullptr);
        CHECK(second.kept.size() == again.size());
    }
}
