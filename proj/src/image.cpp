#include "topofeat/image.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <png.h>

namespace topofeat {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error("cannot load image '" + path + "': " + why);
}

// Reads one PNM token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    return tok;
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    if (next_token(in) != "P5") fail(path, "not a binary PGM (expected P5 magic)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        fail(path, "malformed PGM header");
    }
    if (w < 1 || h < 1) fail(path, "bad dimensions");
    if (maxval < 1 || maxval > 255) fail(path, "only 8-bit PGM supported (maxval <= 255)");
    in.get(); // single whitespace byte after maxval
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) fail(path, "truncated pixel data");
    return img;
}

GrayImage load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) fail(path, "cannot open file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "libpng init failed");
    }

    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> row_ptrs;
    int w = 0, h = 0, channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "libpng decode error");
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    channels = png_get_channels(png, info);
    if (w < 1 || h < 1 || (channels != 1 && channels != 3)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "unsupported PNG layout");
    }

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    raw.resize(stride * h);
    row_ptrs.resize(h);
    for (int y = 0; y < h; ++y) row_ptrs[y] = raw.data() + stride * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    GrayImage img(w, h);
    if (channels == 1) {
        std::memcpy(img.pixels.data(), raw.data(), img.pixels.size());
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            const int r = raw[3 * i], g = raw[3 * i + 1], b = raw[3 * i + 2];
            img.pixels[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
        }
    }
    return img;
}

} // namespace

GrayImage load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) fail(path, "cannot open file");
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '5') return load_pgm(path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
    fail(path, "unrecognized format (expected binary PGM or PNG)");
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image '" + path + "'");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("cannot write image '" + path + "'");
}

} // namespace topofeat
