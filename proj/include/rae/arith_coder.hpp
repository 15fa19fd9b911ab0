#pragma once

#include <cstdint>

#include "rae/bitstream.hpp"

namespace rae {

// One adaptive binary context with Laplace-smoothed counts (start 1/1).
struct BitPredictor {
    std::uint32_t c0 = 1;
    std::uint32_t c1 = 1;

    void update(int bit) {
        if (bit)
            ++c1;
        else
            ++c0;
        // Rescale keeps totals within coder precision; both sides stay >= 1.
        if (c0 + c1 >= 1u << 16) {
            c0 = (c0 + 1) >> 1;
            c1 = (c1 + 1) >> 1;
        }
    }
};

// Integer binary arithmetic coder, 32-bit interval with carry-free
// renormalization (pending-bit follow scheme). Encoder and decoder must see
// the same context update sequence; streams are bit-exact across platforms.
class ArithEncoder {
public:
    void encode(int bit, BitPredictor& ctx);
    // Flushes the interval; returns the code. Encoding nothing gives an
    // empty code.
    BitStream finish();

private:
    void emit(int bit);

    std::uint64_t low_ = 0;
    std::uint64_t high_ = 0xFFFFFFFFull;
    std::uint64_t pending_ = 0;
    bool any_ = false;
    BitStream out_;
};

class ArithDecoder {
public:
    explicit ArithDecoder(const BitStream& code);
    int decode(BitPredictor& ctx);

private:
    int next_bit();

    const BitStream* code_;
    std::uint64_t pos_ = 0;
    std::uint64_t pad_consumed_ = 0;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = 0xFFFFFFFFull;
    std::uint64_t value_ = 0;
};

// Whole-stream entropy coding with a single adaptive context.
// ac_decode(ac_encode(b), b.size()) == b bit-exactly.
BitStream ac_encode(const BitStream& bits);
BitStream ac_decode(const BitStream& code, std::uint64_t n);

}  // namespace rae
