#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rae {

// 8-bit pixel grid, grayscale (c == 1) or RGB (c == 3). Samples are stored
// row-major with channels interleaved: px[(y * w + x) * c + ch].
struct Image {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<std::uint8_t> px;

    Image() = default;
    Image(int h_, int w_, int c_, std::uint8_t fill = 0)
        : h(h_), w(w_), c(c_), px(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

    std::size_t size() const { return px.size(); }

    std::uint8_t& at(int y, int x, int ch = 0) {
        return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    std::uint8_t at(int y, int x, int ch = 0) const {
        return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }

    bool same_dims(const Image& o) const { return h == o.h && w == o.w && c == o.c; }

    friend bool operator==(const Image& a, const Image& b) {
        return a.h == b.h && a.w == b.w && a.c == b.c && a.px == b.px;
    }
};

// l2 distance between two images of equal dims, in 0-255 pixel units.
double image_l2_distance(const Image& a, const Image& b);

// Binary PGM (P5, c == 1) / PPM (P6, c == 3), maxval 255.
Image read_pnm(const std::string& path);
void write_pnm(const Image& img, const std::string& path);

// PNM codecs over in-memory bytes (the file functions are thin wrappers).
Image decode_pnm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);

}  // namespace rae
