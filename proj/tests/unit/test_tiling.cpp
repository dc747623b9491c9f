#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "plm/error.hpp"
#include "plm/tiling.hpp"

using namespace plm::tiling;

TEST_CASE("token accounting equalities")
{
    CHECK(kTokensPerTile == 256);
    CHECK(plan_image_tiles(1792, 1792, 16).total_tokens == 4352);
    CHECK(plan_image_tiles(2688, 2688, 36).total_tokens == 9472);
    CHECK(plan_video_tokens(16) == 4096);
    CHECK(plan_video_tokens(32) == 8192);
    CHECK(plan_video_tokens(1) == 256);
    CHECK_THROWS_AS(plan_video_tokens(0), plm::InvalidInput);
}

TEST_CASE("documented grids")
{
    const auto p = plan_image_tiles(448, 448, 16);
    CHECK(p.rows == 1);
    CHECK(p.cols == 1);
    CHECK_FALSE(p.thumbnail);
    CHECK(p.total_tokens == 256);

    const auto q = plan_image_tiles(1792, 1792, 16);
    CHECK(q.rows == 4);
    CHECK(q.cols == 4);
    CHECK(q.thumbnail);
    const auto s = plan_image_tiles(2688, 2688, 36);
    CHECK(s.rows == 6);
    CHECK(s.cols == 6);

    CHECK(plan_image_tiles(896, 448, 16).cols == 2);
    CHECK(plan_image_tiles(896, 448, 16).rows == 1);
    CHECK_THROWS_AS(plan_image_tiles(10, 10, 0), plm::InvalidInput);
    CHECK_THROWS_AS(plan_image_tiles(0, 10, 4), plm::InvalidInput);
}

TEST_CASE("grid choice is closest in log aspect, bounded and transpose-symmetric")
{
    gen::Rng r(42);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::int64_t w = r.integer(1, 6000);
        const std::int64_t h = r.integer(1, 6000);
        const int m = static_cast<int>(r.integer(1, 40));
        const auto p = plan_image_tiles(w, h, m);
        CHECK(p.rows * p.cols <= m);
        CHECK(p.total_tokens == (p.rows * p.cols + (p.thumbnail ? 1 : 0)) * 256);
        CHECK(p.thumbnail == (p.rows * p.cols > 1));

        // brute-force minimum distance over every admissible grid
        const double t = std::log(static_cast<double>(w) / static_cast<double>(h));
        double best = 1e300;
        for (int a = 1; a <= m; ++a)
            for (int b = 1; a * b <= m; ++b)
                best = std::min(best, std::abs(std::log(static_cast<double>(b) / a) - t));
        CHECK(std::abs(std::log(static_cast<double>(p.cols) / p.rows) - t) <= best + 1e-9);

        const auto q = plan_image_tiles(h, w, m);
        CHECK(q.rows == p.cols);
        CHECK(q.cols == p.rows);
    }
}

TEST_CASE("uniform frame sampling")
{
    std::vector<std::int64_t> ident(32);
    for (int i = 0; i < 32; ++i)
        ident[static_cast<std::size_t>(i)] = i;
    CHECK(sample_frames_uniform(32, 32) == ident);

    const auto s64 = sample_frames_uniform(64, 32);
    REQUIRE(s64.size() == 32);
    CHECK(s64.front() == 0);
    CHECK(s64.back() == 63);

    const auto s10 = sample_frames_uniform(10, 32);
    REQUIRE(s10.size() == 32);
    CHECK(s10.front() == 0);
    CHECK(s10.back() == 9);

    CHECK(sample_frames_uniform(7, 1) == std::vector<std::int64_t>{3});
    CHECK(sample_frames_uniform(8, 1) == std::vector<std::int64_t>{3});
    CHECK(sample_frames_uniform(1, 3) == std::vector<std::int64_t>{0, 0, 0});
    CHECK_THROWS_AS(sample_frames_uniform(0, 3), plm::InvalidInput);
}

TEST_CASE("frame sampling matches an exact rational oracle")
{
    gen::Rng r(8);
    for (int trial = 0; trial < 5000; ++trial) {
        const std::int64_t n = r.integer(1, 5000);
        const std::int64_t k = r.integer(2, 200);
        const auto idx = sample_frames_uniform(n, k);
        REQUIRE(idx.size() == static_cast<std::size_t>(k));
        for (std::int64_t i = 0; i < k; ++i) {
            // round-half-up of p/q: the integer m with m - 1/2 <= p/q < m + 1/2
            const std::int64_t p = i * (n - 1), q = k - 1;
            const std::int64_t m = idx[static_cast<std::size_t>(i)];
            CHECK(2 * p >= (2 * m - 1) * q);
            CHECK(2 * p < (2 * m + 1) * q);
            if (i > 0)
                CHECK(m >= idx[static_cast<std::size_t>(i - 1)]);
        }
        if (n >= 2) {
            CHECK(idx.front() == 0);
            CHECK(idx.back() == n - 1);
        }
    }
}
