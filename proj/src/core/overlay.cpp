#include "plm/overlay.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "plm/error.hpp"
#include "plm/tiling.hpp"

namespace plm::overlay {
namespace {

void check_box(const Box& b, const Image& img, std::int64_t frame)
{
    if (!(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= img.width && 0 <= b.y0 && b.y0 < b.y1 && b.y1 <= img.height))
        throw InvalidInput("box on frame " + std::to_string(frame) + " lies outside the " +
                           std::to_string(img.width) + "x" + std::to_string(img.height) + " frame");
}

void draw_outline(Image& img, const Box& b, Rgb color, int t)
{
    for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x)
            if (x < b.x0 + t || x >= b.x1 - t || y < b.y0 + t || y >= b.y1 - t)
                img.set(x, y, color);
}

bool has_ext(const std::string& path, const char* ext)
{
    auto e = std::filesystem::path(path).extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

// Errors surface through the longjmp handlers below; libpng's default
// handler would also print to stderr.
void png_quiet_error(png_structp png, png_const_charp)
{
    png_longjmp(png, 1);
}

void png_quiet_warning(png_structp, png_const_charp) {}

using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

Image read_png(const std::string& path)
{
    FilePtr f(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!f)
        throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    Image img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("invalid PNG: " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const Image& img)
{
    FilePtr f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f)
        throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Binary P6 with maxval 255.
Image read_ppm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty())
                    break;
                continue;
            }
            t.push_back(c);
        }
        return t;
    };
    if (token() != "P6")
        throw IoError(path + ": only binary P6 PPM is supported");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw IoError(path + ": malformed PPM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255)
        throw IoError(path + ": unsupported PPM dimensions or maxval");
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.rgb.size()))
        throw IoError(path + ": truncated PPM data");
    return img;
}

void write_ppm(const std::string& path, const Image& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

} // namespace

Rgb parse_color(const std::string& name)
{
    if (name == "red")
        return kRed;
    if (name == "blue")
        return kBlue;
    if (name == "green")
        return {0, 255, 0};
    if (name == "yellow")
        return {255, 255, 0};
    if (name.size() == 7 && name[0] == '#') {
        Rgb c{};
        for (int i = 0; i < 3; ++i) {
            const auto part = name.substr(1 + 2 * i, 2);
            if (!std::isxdigit(static_cast<unsigned char>(part[0])) ||
                !std::isxdigit(static_cast<unsigned char>(part[1])))
                throw InvalidInput("bad colour '" + name + "'");
            c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::stoi(part, nullptr, 16));
        }
        return c;
    }
    throw InvalidInput("unknown colour '" + name + "'");
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h)
{
    if (w < 0 || h < 0)
        throw InvalidInput("negative image size");
    rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = fill[0];
        rgb[i + 1] = fill[1];
        rgb[i + 2] = fill[2];
    }
}

Rgb Image::at(int x, int y) const
{
    const auto o = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[o], rgb[o + 1], rgb[o + 2]};
}

void Image::set(int x, int y, Rgb c)
{
    const auto o = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[o] = c[0];
    rgb[o + 1] = c[1];
    rgb[o + 2] = c[2];
}

std::vector<Image> render_overlay(std::span<const Image> frames, const BoxTrack& track, int thickness_px)
{
    if (thickness_px < 1)
        throw InvalidInput("thickness must be >= 1");
    for (const auto& [idx, box] : track.boxes) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= frames.size())
            throw InvalidInput("box references frame " + std::to_string(idx) + " but only " +
                               std::to_string(frames.size()) + " frames were given");
        check_box(box, frames[static_cast<std::size_t>(idx)], idx);
    }
    std::vector<Image> out(frames.begin(), frames.end());
    for (const auto& [idx, box] : track.boxes)
        draw_outline(out[static_cast<std::size_t>(idx)], box, track.color, thickness_px);
    return out;
}

SampledFrames select_and_render(std::span<const Image> video_frames, std::span<const BoxTrack> tracks,
                                std::int64_t k, int thickness_px)
{
    if (video_frames.empty())
        throw InvalidInput("video has no frames");
    for (const auto& t : tracks)
        for (const auto& [idx, box] : t.boxes) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= video_frames.size())
                throw InvalidInput("box references frame " + std::to_string(idx) + " beyond the video");
            check_box(box, video_frames[static_cast<std::size_t>(idx)], idx);
        }
    SampledFrames s;
    s.indices = tiling::sample_frames_uniform(static_cast<std::int64_t>(video_frames.size()), k);
    for (auto i : s.indices)
        s.frames.push_back(video_frames[static_cast<std::size_t>(i)]);
    for (const auto& t : tracks) {
        // Re-key the track onto sampled positions.
        BoxTrack sub;
        sub.track_id = t.track_id;
        sub.color = t.color;
        for (std::size_t pos = 0; pos < s.indices.size(); ++pos)
            if (auto it = t.boxes.find(s.indices[pos]); it != t.boxes.end())
                sub.boxes[static_cast<std::int64_t>(pos)] = it->second;
        s.frames = render_overlay(s.frames, sub, thickness_px);
    }
    return s;
}

Image read_image(const std::string& path)
{
    if (has_ext(path, ".png"))
        return read_png(path);
    if (has_ext(path, ".ppm"))
        return read_ppm(path);
    throw InvalidInput("unsupported image format: " + path);
}

void write_image(const std::string& path, const Image& img)
{
    namespace fs = std::filesystem;
    const bool png = has_ext(path, ".png");
    if (!png && !has_ext(path, ".ppm"))
        throw InvalidInput("unsupported image format: " + path);
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    if (png)
        write_png(tmp, img);
    else
        write_ppm(tmp, img);
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

} // namespace plm::overlay
