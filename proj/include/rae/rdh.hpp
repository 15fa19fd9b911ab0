#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "rae/bitstream.hpp"
#include "rae/image.hpp"

namespace rae::rdh {

// Reversible data hiding: embed a bit payload into an 8-bit cover so that
// blind extraction returns both the exact payload and the exact cover.
//
// Two backends share the contract:
//  - histogram_shift: per channel, repeated peak/zero-bin passes; at most
//    one unit of change per pixel per pass.
//  - compression_embedding: entropy-codes low bit-planes and stores the
//    payload in the freed space.
enum class Backend { histogram_shift, compression_embedding };

Backend backend_from_name(const std::string& name);  // "hs" | "ce"
std::string backend_name(Backend backend);
int backend_id(Backend backend);
Backend backend_from_id(int id);

struct Options {
    int max_passes = 8;  // histogram shift: passes per channel
    int max_planes = 3;  // compression embedding: bit-planes it may claim
};

struct EmbedReport {
    Backend backend = Backend::histogram_shift;
    int passes_used = 0;  // hs: total passes over all channels; ce: planes
    std::uint64_t bits_embedded = 0;
    std::uint64_t capacity_remaining = 0;
    int max_pixel_change = 0;
};

// Sound lower bound: embedding any payload of at most the returned number
// of bits succeeds. A return of 0 means the cover cannot reversibly carry
// even the bookkeeping, and embedding fails for every payload.
std::uint64_t capacity_estimate(const Image& cover, Backend backend,
                                const Options& options = {});

// Histogram-shift backend. Per pass and channel: the peak bin carries
// payload bits, bins strictly between peak and zero bin shift one step, and
// pixels occupying a non-empty zero bin are preserved through an overflow
// location map (run-length + arithmetic coded) carried in-payload. The pass
// header lives in the LSBs of the channel's first pixels; their original
// LSBs lead the pass payload, which keeps extraction blind.
std::pair<Image, EmbedReport> hs_embed(const Image& cover, const BitStream& payload,
                                       int max_passes = 8);
std::pair<BitStream, Image> hs_extract(const Image& marked);

// Compression-embedding backend: bit-planes in raster order form the host
// sequence, replaced by header || ac_encode(host) || payload. Planes are
// added from plane 0 upward until the payload fits.
std::pair<Image, EmbedReport> ce_embed(const Image& cover, const BitStream& payload,
                                       int max_planes = 3);
std::pair<BitStream, Image> ce_extract(const Image& marked);

std::pair<Image, EmbedReport> embed(const Image& cover, const BitStream& payload,
                                    Backend backend, const Options& options = {});
std::pair<BitStream, Image> extract(const Image& marked, Backend backend,
                                    const Options& options = {});

}  // namespace rae::rdh
