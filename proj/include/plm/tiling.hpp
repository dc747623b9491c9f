#pragma once

#include <cstdint>
#include <vector>

namespace plm::tiling {

inline constexpr int kTilePx = 448;
inline constexpr int kPatchPx = 14;
// (448/14)^2 patches per tile, 2x2 average pooled.
inline constexpr int kTokensPerTile = (kTilePx / kPatchPx) * (kTilePx / kPatchPx) / 4;
static_assert(kTokensPerTile == 256);

struct TilePlan {
    int rows = 1;
    int cols = 1;
    int tile_px = kTilePx;
    bool thumbnail = false;
    int tokens_per_tile = kTokensPerTile;
    std::int64_t total_tokens = kTokensPerTile;

    bool operator==(const TilePlan&) const = default;
};

/// Chooses the tile grid whose aspect ratio is closest in log space to the
/// image's. On a distance tie a larger grid only wins when the image has
/// enough pixels to fill more than half of it; remaining ties prefer the
/// squarer grid, then fewer rows.
TilePlan plan_image_tiles(std::int64_t width_px, std::int64_t height_px, int max_tiles);

std::int64_t plan_video_tokens(std::int64_t n_frames_used);

/// 0-based indices round(i*(n-1)/(k-1)); the middle frame when k == 1.
std::vector<std::int64_t> sample_frames_uniform(std::int64_t n_total, std::int64_t k);

} // namespace plm::tiling
