#include "viewforge/image.hpp"

#include "viewforge/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace viewforge {

Image to_gray(const Image& rgb) {
    if (rgb.channels == 1) return rgb;
    Image gray(rgb.width, rgb.height, 1);
    for (std::size_t i = 0; i < rgb.pixels(); ++i) {
        const double* p = &rgb.data[i * rgb.channels];
        gray.data[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return gray;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3) {
        throw Error(ErrorCode::InvalidArgument, "PNG output supports 1 or 3 channels");
    }
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "libpng initialization failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * image.channels + c] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pfm(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 1 && image.channels != 3) {
        throw Error(ErrorCode::InvalidArgument, "PFM output supports 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << (image.channels == 3 ? "PF" : "Pf") << "\n" << image.width << " " << image.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(image.width) * image.channels);
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                row[static_cast<std::size_t>(x) * image.channels + c] = static_cast<float>(image.at(x, y, c));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    in.get();
    if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale >= 0.0) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": unsupported PFM header");
    }
    Image image(w, h, magic == "PF" ? 3 : 1);
    std::vector<float> row(static_cast<std::size_t>(w) * image.channels);
    for (int y = h - 1; y >= 0; --y) {
        if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)))) {
            throw Error(ErrorCode::MalformedFile, path.string() + ": truncated PFM");
        }
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < image.channels; ++c) image.at(x, y, c) = row[static_cast<std::size_t>(x) * image.channels + c];
        }
    }
    return image;
}

} // namespace viewforge
