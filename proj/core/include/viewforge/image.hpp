#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace viewforge {

/// Interleaved row-major image with `channels` doubles per pixel.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    bool empty() const noexcept { return data.empty(); }
    std::size_t pixels() const noexcept { return static_cast<std::size_t>(width) * height; }

    double& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

/// Rec. 601 luma of an RGB image (single channel passes through).
Image to_gray(const Image& rgb);

/// 8-bit PNG, values clamped to [0,1]. Handles 1 or 3 channels.
void write_png(const Image& image, const std::filesystem::path& path);

/// Little-endian PFM ("Pf" for one channel, "PF" for three), rows stored
/// bottom-to-top as the format requires.
void write_pfm(const Image& image, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

} // namespace viewforge
