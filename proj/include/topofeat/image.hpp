#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace topofeat {

/// 8-bit grayscale image, pixels stored row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

// Loads a binary PGM (P5, maxval <= 255) or a PNG. Color PNGs are converted to
// gray with integer luma (299 R + 587 G + 114 B + 500) / 1000; 16-bit depth is
// reduced to 8 bits. Throws std::runtime_error with the path on any failure.
GrayImage load_image(const std::string& path);

void write_pgm(const GrayImage& img, const std::string& path);

} // namespace topofeat
