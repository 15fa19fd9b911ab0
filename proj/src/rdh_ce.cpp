#include <algorithm>

#include "rae/arith_coder.hpp"
#include "rae/crc32.hpp"
#include "rae/errors.hpp"
#include "rae/rdh.hpp"

// Compression-embedding backend. The host sequence is the concatenation of
// bit-planes in raster order (plane 0 first, adding planes until the payload
// fits). The marked planes hold
//   magic (16) | planes used (8) | coded host length (20) | payload length
//   (20) | ac_encode(host) | payload
// with any remaining plane bits left at their cover values. The stored
// payload leads with a CRC32 of the cover bytes so extraction can vouch for
// the restored image.

namespace rae::rdh {

namespace {

constexpr std::uint64_t kCeMagic = 0x4345;  // "CE"
constexpr int kCeHeaderBits = 64;
constexpr int kCoverCrcBits = 32;
constexpr std::uint64_t kMaxFieldBits = 0xFFFFF;  // 20-bit length fields

BitStream collect_planes(const Image& img, int planes) {
    BitStream host;
    for (int q = 0; q < planes; ++q)
        for (std::size_t i = 0; i < img.size(); ++i)
            host.push_bit((img.px[i] >> q) & 1);
    return host;
}

void write_plane_bits(Image& img, const BitStream& bits) {
    const std::uint64_t n = img.size();
    for (std::uint64_t j = 0; j < bits.size(); ++j) {
        const int q = static_cast<int>(j / n);
        const std::uint64_t i = j % n;
        const std::uint8_t mask = static_cast<std::uint8_t>(1u << q);
        if (bits.bit(j))
            img.px[i] |= mask;
        else
            img.px[i] &= static_cast<std::uint8_t>(~mask);
    }
}

}  // namespace

std::pair<Image, EmbedReport> ce_embed(const Image& cover, const BitStream& payload,
                                       int max_planes) {
    if (max_planes < 1 || max_planes > 8)
        throw DomainError("ce_embed: max_planes out of range");
    if (payload.size() > kMaxFieldBits - kCoverCrcBits)
        throw CapacityError(payload.size(), kMaxFieldBits - kCoverCrcBits);
    const std::uint64_t n = cover.size();
    const std::uint64_t stored_bits = payload.size() + kCoverCrcBits;

    std::uint64_t best_free = 0;
    for (int t = 1; t <= max_planes; ++t) {
        const BitStream host = collect_planes(cover, t);
        const BitStream coded = ac_encode(host);
        if (coded.size() > kMaxFieldBits) continue;
        const std::uint64_t slots = static_cast<std::uint64_t>(t) * n;
        const std::uint64_t used = kCeHeaderBits + kCoverCrcBits + coded.size();
        if (slots > used) best_free = std::max(best_free, slots - used);
        if (used + payload.size() <= slots) {
            BitStream stream;
            stream.append_uint(kCeMagic, 16);
            stream.append_uint(static_cast<std::uint64_t>(t), 8);
            stream.append_uint(coded.size(), 20);
            stream.append_uint(stored_bits, 20);
            stream.append(coded);
            stream.append_uint(crc32(cover.px), 32);
            stream.append(payload);
            Image marked = cover;
            write_plane_bits(marked, stream);

            EmbedReport report;
            report.backend = Backend::compression_embedding;
            report.passes_used = t;
            report.bits_embedded = payload.size();
            report.capacity_remaining = slots - used - payload.size();
            int max_change = 0;
            for (std::size_t i = 0; i < cover.px.size(); ++i)
                max_change = std::max(
                    max_change, std::abs(static_cast<int>(marked.px[i]) - cover.px[i]));
            report.max_pixel_change = max_change;
            return {std::move(marked), report};
        }
    }
    throw CapacityError(payload.size(), best_free);
}

std::pair<BitStream, Image> ce_extract(const Image& marked) {
    const std::uint64_t n = marked.size();
    if (n < kCeHeaderBits) throw NotMarkedImageError("ce: image too small for header");

    BitStream header;
    for (int i = 0; i < kCeHeaderBits; ++i) header.push_bit(marked.px[i] & 1);
    if (header.read_uint(0, 16) != kCeMagic)
        throw NotMarkedImageError("ce: container magic mismatch");
    const int t = static_cast<int>(header.read_uint(16, 8));
    const std::uint64_t coded_len = header.read_uint(24, 20);
    const std::uint64_t paylen = header.read_uint(44, 20);
    if (t < 1 || t > 8) throw NotMarkedImageError("ce: invalid plane count");
    if (paylen < kCoverCrcBits) throw NotMarkedImageError("ce: stored payload too short");
    const std::uint64_t slots = static_cast<std::uint64_t>(t) * n;
    if (kCeHeaderBits + coded_len + paylen > slots)
        throw NotMarkedImageError("ce: declared lengths exceed plane capacity");

    const BitStream stream = collect_planes(marked, t);
    const BitStream coded = stream.slice(kCeHeaderBits, coded_len);
    const std::uint32_t cover_crc =
        static_cast<std::uint32_t>(stream.read_uint(kCeHeaderBits + coded_len, 32));
    BitStream payload =
        stream.slice(kCeHeaderBits + coded_len + kCoverCrcBits, paylen - kCoverCrcBits);
    const BitStream host = ac_decode(coded, slots);

    Image img = marked;
    write_plane_bits(img, host);
    if (crc32(img.px) != cover_crc)
        throw NotMarkedImageError("ce: restored image fails its checksum");
    return {std::move(payload), std::move(img)};
}

std::uint64_t ce_capacity_estimate(const Image& cover, int max_planes) {
    std::uint64_t best = 0;
    for (int t = 1; t <= max_planes; ++t) {
        const BitStream coded = ac_encode(collect_planes(cover, t));
        if (coded.size() > kMaxFieldBits) continue;
        const std::uint64_t slots = static_cast<std::uint64_t>(t) * cover.size();
        const std::uint64_t used = kCeHeaderBits + kCoverCrcBits + coded.size();
        if (slots > used) best = std::max(best, slots - used);
    }
    return std::min(best, kMaxFieldBits - kCoverCrcBits);
}

std::uint64_t hs_capacity_estimate(const Image& cover);

Backend backend_from_name(const std::string& name) {
    if (name == "hs") return Backend::histogram_shift;
    if (name == "ce") return Backend::compression_embedding;
    throw DomainError("unknown rdh backend '" + name + "'");
}

std::string backend_name(Backend backend) {
    return backend == Backend::histogram_shift ? "hs" : "ce";
}

int backend_id(Backend backend) { return backend == Backend::histogram_shift ? 1 : 2; }

Backend backend_from_id(int id) {
    if (id == 1) return Backend::histogram_shift;
    if (id == 2) return Backend::compression_embedding;
    throw FormatError("unknown rdh backend id " + std::to_string(id));
}

std::uint64_t capacity_estimate(const Image& cover, Backend backend, const Options& options) {
    return backend == Backend::histogram_shift ? hs_capacity_estimate(cover)
                                               : ce_capacity_estimate(cover, options.max_planes);
}

std::pair<Image, EmbedReport> embed(const Image& cover, const BitStream& payload,
                                    Backend backend, const Options& options) {
    return backend == Backend::histogram_shift ? hs_embed(cover, payload, options.max_passes)
                                               : ce_embed(cover, payload, options.max_planes);
}

std::pair<BitStream, Image> extract(const Image& marked, Backend backend, const Options&) {
    return backend == Backend::histogram_shift ? hs_extract(marked) : ce_extract(marked);
}

}  // namespace rae::rdh
