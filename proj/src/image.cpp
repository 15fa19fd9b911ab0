#include "rae/image.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rae/errors.hpp"

namespace rae {

double image_l2_distance(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw DimensionError("image_l2_distance: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.px.size(); ++i) {
        const double d = static_cast<double>(a.px[i]) - static_cast<double>(b.px[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments per netpbm.
std::string next_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char ch = static_cast<char>(bytes[pos]);
        if (ch == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size()) {
        const char ch = static_cast<char>(bytes[pos]);
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '#') break;
        tok.push_back(ch);
        ++pos;
    }
    if (tok.empty()) throw FormatError("pnm: truncated header", static_cast<std::int64_t>(pos));
    return tok;
}

int parse_positive(const std::string& tok, std::size_t pos, int max_value) {
    int v = 0;
    for (char ch : tok) {
        if (ch < '0' || ch > '9')
            throw FormatError("pnm: invalid numeric field '" + tok + "'",
                              static_cast<std::int64_t>(pos));
        v = v * 10 + (ch - '0');
        if (v > max_value)
            throw FormatError("pnm: field out of range '" + tok + "'",
                              static_cast<std::int64_t>(pos));
    }
    return v;
}

}  // namespace

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("pnm: bad magic, expected P5 or P6", 0);
    const int channels = bytes[1] == '5' ? 1 : 3;
    std::size_t pos = 2;
    const int w = parse_positive(next_token(bytes, pos), pos, 1 << 16);
    const int h = parse_positive(next_token(bytes, pos), pos, 1 << 16);
    const int maxval = parse_positive(next_token(bytes, pos), pos, 1 << 16);
    if (maxval != 255)
        throw FormatError("pnm: unsupported maxval " + std::to_string(maxval),
                          static_cast<std::int64_t>(pos));
    if (pos >= bytes.size())
        throw FormatError("pnm: missing pixel data", static_cast<std::int64_t>(pos));
    ++pos;  // single whitespace byte after maxval
    Image img(h, w, channels);
    if (bytes.size() - pos < img.size())
        throw FormatError("pnm: truncated pixel data", static_cast<std::int64_t>(bytes.size()));
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
              bytes.begin() + static_cast<std::ptrdiff_t>(pos + img.size()), img.px.begin());
    return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
    if (img.c != 1 && img.c != 3)
        throw DimensionError("pnm: only 1- or 3-channel images supported");
    std::string header = (img.c == 1 ? std::string("P5\n") : std::string("P6\n")) +
                         std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.px.begin(), img.px.end());
    return out;
}

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_pnm(bytes);
}

void write_pnm(const Image& img, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_pnm(img);
    // Write-to-temp then rename so failures never leave a partial file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError("short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

}  // namespace rae
