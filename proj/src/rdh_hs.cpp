#include <algorithm>
#include <array>
#include <cstdlib>
#include <vector>

#include "rae/arith_coder.hpp"
#include "rae/crc32.hpp"
#include "rae/errors.hpp"
#include "rae/rdh.hpp"

// Histogram-shift backend.
//
// Container layout, per channel (channels R,G,B embed in order, extract in
// reverse). Each pass writes a 53-bit LSB-substituted prefix into the
// channel's first 53 pixels:
//   peak p (8) | zero bin z (8) | embedded-bit count (20) |
//   overflow-map length (16) | earlier-pass flag (1)
// The pass payload carried by the peak pixels is
//   original prefix LSBs (53) | coded overflow map | chunk
// so extraction is blind: undoing a pass restores the previous pass header
// (or the cover's own LSBs). Chunks are cut from the tail of the framed
// stream, which makes the final pass hold the stream head; peeling passes
// last-first therefore yields the stream in forward order.
//
// The framed stream is magic (16) | payload bit length (24) | CRC32 of the
// payload bytes (32) | CRC32 of the cover bytes (32) | payload. The cover
// checksum turns any surviving tampering of non-carrier pixels into a loud
// extraction failure.

namespace rae::rdh {

namespace {

constexpr int kPrefixPixels = 53;      // 52 header bits + 1 earlier-pass flag
constexpr std::uint64_t kFrameBits = 104;
constexpr std::uint64_t kHsMagic = 0x4853;  // "HS"
constexpr std::uint64_t kMaxCount = 0xFFFFF;
constexpr std::uint64_t kMaxMapLen = 0xFFFF;
constexpr std::uint64_t kMaxPayloadBits = 0xFFFFFF;
constexpr int kExtractPassGuard = 4096;

struct ChannelView {
    Image* img;
    int ch;

    int samples() const { return img->h * img->w; }
    std::uint8_t get(int i) const {
        return img->px[static_cast<std::size_t>(i) * img->c + ch];
    }
    void set(int i, std::uint8_t v) {
        img->px[static_cast<std::size_t>(i) * img->c + ch] = v;
    }
    int lsb(int i) const { return get(i) & 1; }
    void set_lsb(int i, int bit) {
        set(i, static_cast<std::uint8_t>((get(i) & ~1) | (bit & 1)));
    }
};

bool strictly_between(int v, int p, int z) {
    return v > std::min(p, z) && v < std::max(p, z);
}

void append_gamma(BitStream& bs, std::uint64_t v) {
    int width = 0;
    for (std::uint64_t t = v; t > 0; t >>= 1) ++width;
    for (int i = 0; i < width - 1; ++i) bs.push_bit(0);
    for (int i = width - 1; i >= 0; --i) bs.push_bit(static_cast<int>((v >> i) & 1));
}

// Overflow map: bitmap over the pixels that will carry the zero-bin value
// after the pass, raster order, 1 = pixel originally sat in the zero bin.
// Run-length (Elias gamma over zero-run lengths) then arithmetic coded.
BitStream encode_overflow_map(const std::vector<std::uint8_t>& bitmap) {
    BitStream rle;
    std::size_t pos = 0;
    while (pos < bitmap.size()) {
        std::uint64_t zeros = 0;
        while (pos < bitmap.size() && bitmap[pos] == 0) {
            ++zeros;
            ++pos;
        }
        append_gamma(rle, zeros + 1);
        if (pos < bitmap.size()) ++pos;  // consume the 1 closing this run
    }
    ArithEncoder enc;
    BitPredictor ctx;
    for (std::uint64_t i = 0; i < rle.size(); ++i) enc.encode(rle.bit(i), ctx);
    return enc.finish();
}

std::vector<std::uint8_t> decode_overflow_map(const BitStream& coded, std::size_t n_marked) {
    std::vector<std::uint8_t> bitmap;
    if (n_marked == 0) {
        if (!coded.empty())
            throw NotMarkedImageError("hs: overflow map present without zero-bin pixels");
        return bitmap;
    }
    ArithDecoder dec(coded);
    BitPredictor ctx;
    auto next_bit = [&] { return dec.decode(ctx); };
    while (bitmap.size() < n_marked) {
        int zeros_prefix = 0;
        while (next_bit() == 0) {
            if (++zeros_prefix > 63) throw NotMarkedImageError("hs: malformed overflow map");
        }
        std::uint64_t v = 1;
        for (int i = 0; i < zeros_prefix; ++i)
            v = (v << 1) | static_cast<std::uint64_t>(next_bit());
        const std::uint64_t zero_run = v - 1;
        for (std::uint64_t i = 0; i < zero_run; ++i) {
            bitmap.push_back(0);
            if (bitmap.size() > n_marked)
                throw NotMarkedImageError("hs: overflow map longer than zero-bin population");
        }
        if (bitmap.size() < n_marked) bitmap.push_back(1);
    }
    return bitmap;
}

struct PassPlan {
    int p = 0;
    int z = 0;
    int dir = 0;
    std::array<std::uint32_t, 256> hist{};
    BitStream coded_map;

    std::uint64_t capacity() const { return hist[static_cast<std::size_t>(p)]; }
    std::uint64_t overhead() const { return kPrefixPixels + coded_map.size(); }
};

// Chooses peak and zero bins over the embedding area (everything past the
// prefix). Peak: argmax, lowest value on tie. Zero bin: empty bins first,
// then minimal count; nearer to the peak wins, and of the two equidistant
// neighbours the upper one. A non-empty zero bin must sit at least two away
// from the peak, otherwise its population would collide with the bit-one
// carriers.
bool plan_pass(const ChannelView& view, PassPlan& plan) {
    const int n = view.samples();
    if (n <= kPrefixPixels) return false;
    plan.hist.fill(0);
    for (int i = kPrefixPixels; i < n; ++i) ++plan.hist[view.get(i)];

    int p = 0;
    for (int v = 1; v < 256; ++v)
        if (plan.hist[v] > plan.hist[p]) p = v;
    if (plan.hist[p] == 0) return false;

    int best = -1;
    for (int v = 0; v < 256; ++v) {
        if (v == p) continue;
        const std::uint32_t cnt = plan.hist[v];
        if (cnt > 0 && std::abs(v - p) < 2) continue;
        if (best < 0) {
            best = v;
            continue;
        }
        const std::uint32_t bc = plan.hist[best];
        const int dv = std::abs(v - p), db = std::abs(best - p);
        if (cnt < bc || (cnt == bc && (dv < db || (dv == db && v > best)))) best = v;
    }
    if (best < 0) return false;
    plan.p = p;
    plan.z = best;
    plan.dir = plan.z > plan.p ? 1 : -1;

    plan.coded_map = BitStream{};
    if (plan.hist[plan.z] > 0) {
        std::vector<std::uint8_t> bitmap;
        const int feeder = plan.z - plan.dir;  // bin that shifts into z
        for (int i = kPrefixPixels; i < n; ++i) {
            const int v = view.get(i);
            if (v == plan.z)
                bitmap.push_back(1);
            else if (v == feeder)
                bitmap.push_back(0);
        }
        plan.coded_map = encode_overflow_map(bitmap);
        if (plan.coded_map.size() > kMaxMapLen) return false;
    }
    return true;
}

void write_prefix(ChannelView& view, const PassPlan& plan, std::uint64_t count,
                  int earlier_pass_flag) {
    BitStream hdr;
    hdr.append_uint(static_cast<std::uint64_t>(plan.p), 8);
    hdr.append_uint(static_cast<std::uint64_t>(plan.z), 8);
    hdr.append_uint(count, 20);
    hdr.append_uint(plan.coded_map.size(), 16);
    hdr.push_bit(earlier_pass_flag);
    for (int i = 0; i < kPrefixPixels; ++i) view.set_lsb(i, hdr.bit(static_cast<std::uint64_t>(i)));
}

}  // namespace

std::pair<Image, EmbedReport> hs_embed(const Image& cover, const BitStream& payload,
                                       int max_passes) {
    if (max_passes < 1 || max_passes > 1024)
        throw DomainError("hs_embed: max_passes out of range");
    if (payload.size() > kMaxPayloadBits)
        throw CapacityError(payload.size(), kMaxPayloadBits);

    BitStream framed;
    framed.append_uint(kHsMagic, 16);
    framed.append_uint(payload.size(), 24);
    framed.append_uint(crc32(payload.bytes()), 32);
    framed.append_uint(crc32(cover.px), 32);
    framed.append(payload);

    Image marked = cover;
    std::uint64_t remaining = framed.size();
    int total_passes = 0;

    for (int ch = 0; ch < marked.c; ++ch) {
        ChannelView view{&marked, ch};
        int passes_here = 0;
        for (;;) {
            const bool mandatory = passes_here == 0;  // blind extraction peels
                                                      // every channel at least once
            if (!mandatory && remaining == 0) break;
            if (!mandatory && passes_here >= max_passes) break;

            PassPlan plan;
            const bool feasible = plan_pass(view, plan) && plan.capacity() >= plan.overhead();
            if (!feasible) {
                if (mandatory)
                    throw CapacityError(framed.size(), framed.size() - remaining);
                break;
            }

            const std::uint64_t room =
                std::min(plan.capacity(), kMaxCount) - plan.overhead();
            const std::uint64_t chunk_len = std::min<std::uint64_t>(remaining, room);

            BitStream pass_payload;
            for (int i = 0; i < kPrefixPixels; ++i) pass_payload.push_bit(view.lsb(i));
            pass_payload.append(plan.coded_map);
            pass_payload.append(framed.slice(remaining - chunk_len, chunk_len));
            const std::uint64_t count = pass_payload.size();

            std::uint64_t cursor = 0;
            const int n = view.samples();
            for (int i = kPrefixPixels; i < n; ++i) {
                const int v = view.get(i);
                if (v == plan.p) {
                    if (cursor < count && pass_payload.bit(cursor++))
                        view.set(i, static_cast<std::uint8_t>(plan.p + plan.dir));
                } else if (strictly_between(v, plan.p, plan.z)) {
                    view.set(i, static_cast<std::uint8_t>(v + plan.dir));
                }
                // pixels at z stay; the overflow map preserves them
            }

            write_prefix(view, plan, count, passes_here > 0 ? 1 : 0);
            remaining -= chunk_len;
            ++passes_here;
            ++total_passes;
        }
    }
    if (remaining > 0) throw CapacityError(framed.size(), framed.size() - remaining);

    EmbedReport report;
    report.backend = Backend::histogram_shift;
    report.passes_used = total_passes;
    report.bits_embedded = payload.size();
    const std::uint64_t est = capacity_estimate(cover, Backend::histogram_shift);
    report.capacity_remaining = est > payload.size() ? est - payload.size() : 0;
    int max_change = 0;
    for (std::size_t i = 0; i < cover.px.size(); ++i)
        max_change = std::max(max_change,
                              std::abs(static_cast<int>(marked.px[i]) - cover.px[i]));
    report.max_pixel_change = max_change;
    return {std::move(marked), report};
}

std::pair<BitStream, Image> hs_extract(const Image& marked) {
    Image img = marked;
    BitStream assembled;

    for (int ch = img.c - 1; ch >= 0; --ch) {
        ChannelView view{&img, ch};
        const int n = view.samples();
        if (n <= kPrefixPixels)
            throw NotMarkedImageError("hs: image too small to hold a pass header");

        int peeled = 0;
        for (;;) {
            if (++peeled > kExtractPassGuard)
                throw NotMarkedImageError("hs: pass chain does not terminate");

            BitStream hdr;
            for (int i = 0; i < kPrefixPixels; ++i) hdr.push_bit(view.lsb(i));
            const int p = static_cast<int>(hdr.read_uint(0, 8));
            const int z = static_cast<int>(hdr.read_uint(8, 8));
            const std::uint64_t count = hdr.read_uint(16, 20);
            const std::uint64_t map_len = hdr.read_uint(36, 16);
            const int earlier = hdr.bit(52);

            if (p == z) throw NotMarkedImageError("hs: pass header has p == z");
            const int dir = z > p ? 1 : -1;
            const int dist = std::abs(z - p);
            if (count < kPrefixPixels + map_len)
                throw NotMarkedImageError("hs: pass count below bookkeeping size");
            if (count > static_cast<std::uint64_t>(n - kPrefixPixels))
                throw NotMarkedImageError("hs: pass count exceeds area");
            if (dist == 1 && map_len != 0)
                throw NotMarkedImageError("hs: adjacent zero bin cannot carry a map");

            // Collect carried bits; carriers are peak-valued (0) and
            // peak+dir-valued (1) pixels in raster order.
            BitStream pass_payload;
            std::vector<int> one_positions;
            std::size_t n_marked_z = 0;
            for (int i = kPrefixPixels; i < n; ++i) {
                const int v = view.get(i);
                if (dist >= 2 && v == z) ++n_marked_z;
                if (pass_payload.size() < count) {
                    if (v == p) {
                        pass_payload.push_bit(0);
                    } else if (v == p + dir) {
                        pass_payload.push_bit(1);
                        one_positions.push_back(i);
                    }
                } else if (v == p + dir) {
                    throw NotMarkedImageError("hs: carrier pixel past declared count");
                }
            }
            if (pass_payload.size() < count)
                throw NotMarkedImageError("hs: fewer carriers than declared count");

            std::vector<std::uint8_t> bitmap;
            if (dist >= 2) {
                const BitStream coded_map = pass_payload.slice(kPrefixPixels, map_len);
                if (map_len == 0)
                    bitmap.assign(n_marked_z, 0);
                else
                    bitmap = decode_overflow_map(coded_map, n_marked_z);
            }

            for (int i : one_positions) view.set(i, static_cast<std::uint8_t>(p));

            if (dist >= 2) {
                std::size_t zk = 0;
                for (int i = kPrefixPixels; i < n; ++i) {
                    const int v = view.get(i);
                    if (v == z) {
                        if (!bitmap[zk++]) view.set(i, static_cast<std::uint8_t>(z - dir));
                    } else if (v != p + dir && strictly_between(v, p, z)) {
                        view.set(i, static_cast<std::uint8_t>(v - dir));
                    }
                }
            }

            for (int i = 0; i < kPrefixPixels; ++i)
                view.set_lsb(i, pass_payload.bit(static_cast<std::uint64_t>(i)));

            assembled.append(
                pass_payload.slice(kPrefixPixels + map_len, count - kPrefixPixels - map_len));
            if (!earlier) break;
        }
    }

    if (assembled.size() < kFrameBits)
        throw NotMarkedImageError("hs: assembled stream shorter than frame");
    if (assembled.read_uint(0, 16) != kHsMagic)
        throw NotMarkedImageError("hs: container magic mismatch");
    const std::uint64_t paylen = assembled.read_uint(16, 24);
    const std::uint32_t payload_crc = static_cast<std::uint32_t>(assembled.read_uint(40, 32));
    const std::uint32_t cover_crc = static_cast<std::uint32_t>(assembled.read_uint(72, 32));
    if (assembled.size() != kFrameBits + paylen)
        throw NotMarkedImageError("hs: container length mismatch");
    BitStream payload = assembled.slice(kFrameBits, paylen);
    if (crc32(payload.bytes()) != payload_crc)
        throw NotMarkedImageError("hs: payload CRC mismatch");
    if (crc32(img.px) != cover_crc)
        throw NotMarkedImageError("hs: restored image fails its checksum");
    return {std::move(payload), std::move(img)};
}

std::uint64_t hs_capacity_estimate(const Image& cover) {
    // Single pass per channel is payload-independent, so it gives a sound
    // lower bound; multi-pass embedding may exceed it.
    Image probe = cover;
    std::uint64_t total = 0;
    for (int ch = 0; ch < probe.c; ++ch) {
        ChannelView view{&probe, ch};
        PassPlan plan;
        if (!plan_pass(view, plan)) return 0;
        const std::uint64_t cap = std::min(plan.capacity(), kMaxCount);
        if (cap < plan.overhead()) return 0;
        total += cap - plan.overhead();
    }
    if (total <= kFrameBits) return 0;
    return std::min(total - kFrameBits, kMaxPayloadBits);
}

}  // namespace rae::rdh
