#include "plm/tiling.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "plm/error.hpp"

namespace plm::tiling {

TilePlan plan_image_tiles(std::int64_t width_px, std::int64_t height_px, int max_tiles)
{
    if (width_px < 1 || height_px < 1)
        throw InvalidInput("image dimensions must be >= 1");
    if (max_tiles < 1)
        throw InvalidInput("max_tiles must be >= 1, got " + std::to_string(max_tiles));

    constexpr double kEps = 1e-12;
    const double target = std::log(static_cast<double>(width_px) / static_cast<double>(height_px));
    const double area = static_cast<double>(width_px) * static_cast<double>(height_px);
    const double tile_area = static_cast<double>(kTilePx) * kTilePx;

    int best_r = 1;
    int best_c = 1;
    double best_d = std::abs(target);
    auto squareness = [](int r, int c) { return std::abs(std::log(static_cast<double>(c) / r)); };

    // Visit grids by increasing tile count so the upscale guard sees the
    // smaller candidate first.
    for (int n = 1; n <= max_tiles; ++n) {
        for (int r = 1; r <= n; ++r) {
            if (n % r != 0)
                continue;
            const int c = n / r;
            if (r == best_r && c == best_c)
                continue;
            const double d = std::abs(std::log(static_cast<double>(c) / r) - target);
            bool take = false;
            if (d < best_d - kEps) {
                take = true;
            } else if (std::abs(d - best_d) <= kEps) {
                const int best_n = best_r * best_c;
                if (n > best_n)
                    take = area > 0.5 * tile_area * n;
                else if (n == best_n) {
                    const double sq = squareness(r, c);
                    const double best_sq = squareness(best_r, best_c);
                    take = sq < best_sq - kEps || (std::abs(sq - best_sq) <= kEps && r < best_r);
                }
            }
            if (take) {
                best_r = r;
                best_c = c;
                best_d = d;
            }
        }
    }

    TilePlan plan;
    plan.rows = best_r;
    plan.cols = best_c;
    plan.thumbnail = best_r * best_c > 1;
    plan.total_tokens =
        static_cast<std::int64_t>(best_r * best_c + (plan.thumbnail ? 1 : 0)) * plan.tokens_per_tile;
    return plan;
}

std::int64_t plan_video_tokens(std::int64_t n_frames_used)
{
    if (n_frames_used < 1)
        throw InvalidInput("n_frames_used must be >= 1");
    return n_frames_used * kTokensPerTile;
}

std::vector<std::int64_t> sample_frames_uniform(std::int64_t n_total, std::int64_t k)
{
    if (n_total < 1 || k < 1)
        throw InvalidInput("sample_frames_uniform needs n_total >= 1 and k >= 1");
    if (k == 1)
        return {(n_total - 1) / 2};
    std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
    // Exact half-up rounding of i*(n-1)/(k-1) in integers.
    const std::int64_t den = k - 1;
    for (std::int64_t i = 0; i < k; ++i)
        idx[static_cast<std::size_t>(i)] = (2 * i * (n_total - 1) + den) / (2 * den);
    return idx;
}

} // namespace plm::tiling
