#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace plm::overlay {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kBlue{0, 0, 255};

// Accepts "red", "blue", "green", "yellow" or "#rrggbb".
Rgb parse_color(const std::string& name);

/// Interleaved 8-bit RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, Rgb fill = {0, 0, 0});

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    bool operator==(const Image&) const = default;
};

/// Half-open pixel box [x0, x1) x [y0, y1).
struct Box {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
};

struct BoxTrack {
    std::string track_id;
    Rgb color = kRed;
    std::map<std::int64_t, Box> boxes; // frame index -> box; absent = not visible
};

/// Outline of `thickness_px` drawn inward from the box edge, on copies of the
/// frames. frames[i] is frame index i.
std::vector<Image> render_overlay(std::span<const Image> frames, const BoxTrack& track, int thickness_px = 4);

struct SampledFrames {
    std::vector<std::int64_t> indices;
    std::vector<Image> frames;
};

/// Uniformly samples k frames, then draws every track (in order) on them.
SampledFrames select_and_render(std::span<const Image> video_frames, std::span<const BoxTrack> tracks,
                                std::int64_t k = 32, int thickness_px = 4);

Image read_image(const std::string& path); // .png or .ppm
void write_image(const std::string& path, const Image& img);

} // namespace plm::overlay
