#pragma once

#include <cstdint>
#include <vector>

namespace rae {

// Ordered bit sequence. Bits pack most-significant-bit-first within each
// byte; the byte serialization is the normative wire format for payloads.
class BitStream {
public:
    BitStream() = default;

    std::uint64_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }

    void push_bit(int bit);
    // Appends the low `width` bits of `value`, most significant first.
    void append_uint(std::uint64_t value, int width);
    void append(const BitStream& other);

    int bit(std::uint64_t index) const;  // throws FormatError past the end
    std::uint64_t read_uint(std::uint64_t index, int width) const;

    BitStream slice(std::uint64_t start, std::uint64_t len) const;

    // Packed bytes, last byte zero-padded.
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    static BitStream from_bytes(const std::vector<std::uint8_t>& bytes, std::uint64_t nbits);

    friend bool operator==(const BitStream& a, const BitStream& b) {
        return a.nbits_ == b.nbits_ && a.bytes_ == b.bytes_;
    }

    // Sequential cursor; reads throw FormatError on overrun.
    class Reader {
    public:
        explicit Reader(const BitStream& bs) : bs_(&bs) {}
        int read_bit();
        std::uint64_t read_uint(int width);
        std::uint64_t position() const { return pos_; }
        std::uint64_t remaining() const { return bs_->size() - pos_; }

    private:
        const BitStream* bs_;
        std::uint64_t pos_ = 0;
    };

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t nbits_ = 0;
};

}  // namespace rae
