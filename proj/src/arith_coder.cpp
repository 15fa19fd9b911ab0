#include "rae/arith_coder.hpp"

#include "rae/errors.hpp"

namespace rae {

namespace {
constexpr std::uint64_t kTop = 0xFFFFFFFFull;
constexpr std::uint64_t kHalf = 0x80000000ull;
constexpr std::uint64_t kQuarter = 0x40000000ull;
constexpr std::uint64_t kThreeQuarters = 0xC0000000ull;
// Pad budget: 32 bits of register fill plus flush slack. A structurally
// valid code never needs more; truncated codes blow past it.
constexpr std::uint64_t kMaxPad = 80;
}  // namespace

void ArithEncoder::emit(int bit) {
    out_.push_bit(bit);
    while (pending_ > 0) {
        out_.push_bit(!bit);
        --pending_;
    }
}

void ArithEncoder::encode(int bit, BitPredictor& ctx) {
    any_ = true;
    const std::uint64_t range = high_ - low_ + 1;
    const std::uint64_t total = ctx.c0 + ctx.c1;
    const std::uint64_t split = low_ + (range * ctx.c0) / total - 1;
    if (bit == 0)
        high_ = split;
    else
        low_ = split + 1;
    ctx.update(bit);
    for (;;) {
        if (high_ < kHalf) {
            emit(0);
        } else if (low_ >= kHalf) {
            emit(1);
            low_ -= kHalf;
            high_ -= kHalf;
        } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
            ++pending_;
            low_ -= kQuarter;
            high_ -= kQuarter;
        } else {
            break;
        }
        low_ <<= 1;
        high_ = (high_ << 1) | 1;
    }
}

BitStream ArithEncoder::finish() {
    if (!any_) return BitStream{};
    ++pending_;
    if (low_ < kQuarter)
        emit(0);
    else
        emit(1);
    return std::move(out_);
}

ArithDecoder::ArithDecoder(const BitStream& code) : code_(&code) {
    for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | static_cast<std::uint64_t>(next_bit());
}

int ArithDecoder::next_bit() {
    if (pos_ < code_->size()) return code_->bit(pos_++);
    ++pad_consumed_;
    if (pad_consumed_ > kMaxPad)
        throw FormatError("arith: code exhausted before all symbols decoded");
    return 0;
}

int ArithDecoder::decode(BitPredictor& ctx) {
    const std::uint64_t range = high_ - low_ + 1;
    const std::uint64_t total = ctx.c0 + ctx.c1;
    const std::uint64_t split = low_ + (range * ctx.c0) / total - 1;
    const int bit = value_ > split ? 1 : 0;
    if (bit == 0)
        high_ = split;
    else
        low_ = split + 1;
    ctx.update(bit);
    for (;;) {
        if (high_ < kHalf) {
            // nothing
        } else if (low_ >= kHalf) {
            low_ -= kHalf;
            high_ -= kHalf;
            value_ -= kHalf;
        } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
            low_ -= kQuarter;
            high_ -= kQuarter;
            value_ -= kQuarter;
        } else {
            break;
        }
        low_ <<= 1;
        high_ = (high_ << 1) | 1;
        value_ = (value_ << 1) | static_cast<std::uint64_t>(next_bit());
    }
    return bit;
}

BitStream ac_encode(const BitStream& bits) {
    if (bits.empty()) return BitStream{};
    ArithEncoder enc;
    BitPredictor ctx;
    for (std::uint64_t i = 0; i < bits.size(); ++i) enc.encode(bits.bit(i), ctx);
    return enc.finish();
}

BitStream ac_decode(const BitStream& code, std::uint64_t n) {
    BitStream out;
    if (n == 0) {
        if (!code.empty()) throw FormatError("arith: nonempty code for empty stream");
        return out;
    }
    ArithDecoder dec(code);
    BitPredictor ctx;
    for (std::uint64_t i = 0; i < n; ++i) out.push_bit(dec.decode(ctx));
    return out;
}

}  // namespace rae
