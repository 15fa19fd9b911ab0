#include <algorithm>
#include <cmath>

#include "rae/arith_coder.hpp"
#include "rae/crc32.hpp"
#include "rae/errors.hpp"
#include "rae/pipeline.hpp"

namespace rae::pipeline {

Perturbation perturbation_between(const Image& adversarial, const Image& original) {
    if (!adversarial.same_dims(original))
        throw DimensionError("perturbation: image dims differ");
    Perturbation r;
    r.h = original.h;
    r.w = original.w;
    r.c = original.c;
    r.values.resize(original.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        r.values[i] = static_cast<std::int16_t>(static_cast<int>(adversarial.px[i]) -
                                                static_cast<int>(original.px[i]));
    return r;
}

Image apply_perturbation_inverse(const Image& adversarial, const Perturbation& r) {
    if (adversarial.h != r.h || adversarial.w != r.w || adversarial.c != r.c)
        throw DimensionError("perturbation: dims do not match image");
    Image original(adversarial.h, adversarial.w, adversarial.c);
    for (std::size_t i = 0; i < original.size(); ++i) {
        const int v = static_cast<int>(adversarial.px[i]) - r.values[i];
        if (v < 0 || v > 255)
            throw CorruptedPayloadError("perturbation: recovered pixel out of range");
        original.px[i] = static_cast<std::uint8_t>(v);
    }
    return original;
}

namespace {

constexpr int kDimsBits = 40;  // H 16 | W 16 | C 8
constexpr int kValueBits = 9;  // zigzag of [-255, 255]
constexpr int kIndexBits = 24;

std::uint32_t zigzag(int v) {
    return v >= 0 ? static_cast<std::uint32_t>(v) << 1
                  : (static_cast<std::uint32_t>(-v) << 1) - 1;
}

int unzigzag(std::uint32_t u) {
    return (u & 1) ? -static_cast<int>((u + 1) >> 1) : static_cast<int>(u >> 1);
}

// Fixed-width field through per-bit-position adaptive contexts; skewed
// fields shrink to almost nothing under the arithmetic coder.
void encode_field(ArithEncoder& enc, std::vector<BitPredictor>& ctxs, std::uint32_t value,
                  int width) {
    for (int i = width - 1; i >= 0; --i)
        enc.encode(static_cast<int>((value >> i) & 1u), ctxs[static_cast<std::size_t>(i)]);
}

std::uint32_t decode_field(ArithDecoder& dec, std::vector<BitPredictor>& ctxs, int width) {
    std::uint32_t v = 0;
    for (int i = width - 1; i >= 0; --i)
        v |= static_cast<std::uint32_t>(dec.decode(ctxs[static_cast<std::size_t>(i)])) << i;
    return v;
}

// One-shot fields (the nonzero count) share a single context; per-position
// contexts would never see a second sample to adapt on.
void encode_field_shared(ArithEncoder& enc, BitPredictor& ctx, std::uint32_t value, int width) {
    for (int i = width - 1; i >= 0; --i)
        enc.encode(static_cast<int>((value >> i) & 1u), ctx);
}

std::uint32_t decode_field_shared(ArithDecoder& dec, BitPredictor& ctx, int width) {
    std::uint32_t v = 0;
    for (int i = width - 1; i >= 0; --i)
        v |= static_cast<std::uint32_t>(dec.decode(ctx)) << i;
    return v;
}

BitStream encode_dense(const Perturbation& r) {
    ArithEncoder enc;
    std::vector<BitPredictor> value_ctx(kValueBits);
    for (std::int16_t v : r.values) encode_field(enc, value_ctx, zigzag(v), kValueBits);
    return enc.finish();
}

BitStream encode_sparse(const Perturbation& r) {
    ArithEncoder enc;
    BitPredictor count_ctx;
    std::vector<BitPredictor> gap_ctx(kIndexBits);
    std::vector<BitPredictor> value_ctx(kValueBits);

    std::uint32_t nonzero = 0;
    for (std::int16_t v : r.values)
        if (v != 0) ++nonzero;
    encode_field_shared(enc, count_ctx, nonzero, kIndexBits);
    std::uint32_t prev = 0;
    bool first = true;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (r.values[i] == 0) continue;
        const std::uint32_t gap =
            first ? static_cast<std::uint32_t>(i) : static_cast<std::uint32_t>(i) - prev - 1;
        encode_field(enc, gap_ctx, gap, kIndexBits);
        encode_field(enc, value_ctx, zigzag(r.values[i]) - 1, kValueBits);
        prev = static_cast<std::uint32_t>(i);
        first = false;
    }
    return enc.finish();
}

}  // namespace

BitStream encode_perturbation(const Perturbation& r) {
    if (r.values.size() != static_cast<std::size_t>(r.h) * r.w * r.c)
        throw DimensionError("perturbation: value count does not match dims");
    if (r.values.size() >= (1u << kIndexBits))
        throw DomainError("perturbation: image too large for codec");
    for (std::int16_t v : r.values)
        if (v < -255 || v > 255) throw DomainError("perturbation: value out of [-255, 255]");

    const BitStream dense = encode_dense(r);
    const BitStream sparse = encode_sparse(r);
    const bool use_sparse = sparse.size() < dense.size();

    BitStream out;
    out.append_uint(use_sparse ? 1 : 0, 2);
    out.append_uint(static_cast<std::uint64_t>(r.h), 16);
    out.append_uint(static_cast<std::uint64_t>(r.w), 16);
    out.append_uint(static_cast<std::uint64_t>(r.c), 8);
    out.append(use_sparse ? sparse : dense);
    return out;
}

Perturbation decode_perturbation(const BitStream& bits) {
    if (bits.size() < 2 + kDimsBits)
        throw FormatError("perturbation: stream shorter than header");
    const std::uint64_t mode = bits.read_uint(0, 2);
    if (mode > 1)
        throw FormatError("perturbation: invalid mode tag " + std::to_string(mode));
    Perturbation r;
    r.h = static_cast<int>(bits.read_uint(2, 16));
    r.w = static_cast<int>(bits.read_uint(18, 16));
    r.c = static_cast<int>(bits.read_uint(34, 8));
    if (r.h <= 0 || r.w <= 0 || r.c <= 0)
        throw FormatError("perturbation: invalid dims");
    const std::uint64_t n = static_cast<std::uint64_t>(r.h) * r.w * r.c;
    if (n >= (1u << kIndexBits)) throw FormatError("perturbation: dims too large");
    r.values.assign(n, 0);

    const BitStream body = bits.slice(2 + kDimsBits, bits.size() - 2 - kDimsBits);
    if (mode == 0) {
        ArithDecoder dec(body);
        std::vector<BitPredictor> value_ctx(kValueBits);
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint32_t u = decode_field(dec, value_ctx, kValueBits);
            if (u > 510) throw FormatError("perturbation: dense value out of range");
            r.values[i] = static_cast<std::int16_t>(unzigzag(u));
        }
    } else {
        ArithDecoder dec(body);
        BitPredictor count_ctx;
        std::vector<BitPredictor> gap_ctx(kIndexBits);
        std::vector<BitPredictor> value_ctx(kValueBits);
        const std::uint32_t nonzero = decode_field_shared(dec, count_ctx, kIndexBits);
        if (nonzero > n) throw FormatError("perturbation: nonzero count exceeds size");
        std::uint64_t pos = 0;
        for (std::uint32_t k = 0; k < nonzero; ++k) {
            const std::uint32_t gap = decode_field(dec, gap_ctx, kIndexBits);
            pos = k == 0 ? gap : pos + 1 + gap;
            if (pos >= n) throw FormatError("perturbation: index past end");
            const std::uint32_t u = decode_field(dec, value_ctx, kValueBits) + 1;
            if (u > 510) throw FormatError("perturbation: sparse value out of range");
            r.values[pos] = static_cast<std::int16_t>(unzigzag(u));
        }
    }
    return r;
}

BitStream serialize_rae_header(const RaeHeader& header) {
    BitStream bs;
    bs.append_uint(0x52414531ull, 32);  // "RAE1"
    bs.append_uint(1, 8);
    bs.append_uint(static_cast<std::uint64_t>(header.attack_id), 8);
    bs.append_uint(static_cast<std::uint64_t>(header.backend_id), 8);
    const double eps = std::clamp(header.eps, 0.0, 65535.0);
    bs.append_uint(static_cast<std::uint64_t>(std::llround(eps * 256.0)), 24);
    bs.append_uint(static_cast<std::uint64_t>(header.h), 16);
    bs.append_uint(static_cast<std::uint64_t>(header.w), 16);
    bs.append_uint(static_cast<std::uint64_t>(header.c), 8);
    bs.append_uint(header.payload_bits, 32);
    bs.append_uint(header.payload_crc, 32);
    return bs;
}

RaeHeader parse_rae_header(const BitStream& bits) {
    if (bits.size() < kRaeHeaderBits)
        throw CorruptedPayloadError("rae header: stream too short");
    if (bits.read_uint(0, 32) != 0x52414531ull)
        throw CorruptedPayloadError("rae header: magic mismatch");
    if (bits.read_uint(32, 8) != 1)
        throw CorruptedPayloadError("rae header: unsupported version");
    RaeHeader h;
    h.attack_id = static_cast<int>(bits.read_uint(40, 8));
    h.backend_id = static_cast<int>(bits.read_uint(48, 8));
    h.eps = static_cast<double>(bits.read_uint(56, 24)) / 256.0;
    h.h = static_cast<int>(bits.read_uint(80, 16));
    h.w = static_cast<int>(bits.read_uint(96, 16));
    h.c = static_cast<int>(bits.read_uint(112, 8));
    h.payload_bits = bits.read_uint(120, 32);
    h.payload_crc = static_cast<std::uint32_t>(bits.read_uint(152, 32));
    return h;
}

int attack_id(attacks::Method m) {
    switch (m) {
        case attacks::Method::fgsm: return 1;
        case attacks::Method::igsm_l2: return 2;
        case attacks::Method::deepfool_l2: return 3;
        case attacks::Method::cw_l2: return 4;
    }
    return 0;
}

attacks::Method attack_from_id(int id) {
    switch (id) {
        case 1: return attacks::Method::fgsm;
        case 2: return attacks::Method::igsm_l2;
        case 3: return attacks::Method::deepfool_l2;
        case 4: return attacks::Method::cw_l2;
    }
    throw FormatError("rae header: unknown attack id " + std::to_string(id));
}

}  // namespace rae::pipeline
