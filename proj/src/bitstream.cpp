#include "rae/bitstream.hpp"

#include "rae/errors.hpp"

namespace rae {

void BitStream::push_bit(int bit) {
    const std::uint64_t byte_index = nbits_ >> 3;
    if (byte_index >= bytes_.size()) bytes_.push_back(0);
    if (bit) bytes_[byte_index] |= static_cast<std::uint8_t>(0x80u >> (nbits_ & 7));
    ++nbits_;
}

void BitStream::append_uint(std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i) push_bit(static_cast<int>((value >> i) & 1u));
}

void BitStream::append(const BitStream& other) {
    for (std::uint64_t i = 0; i < other.nbits_; ++i) push_bit(other.bit(i));
}

int BitStream::bit(std::uint64_t index) const {
    if (index >= nbits_)
        throw FormatError("bitstream: read past end", static_cast<std::int64_t>(index >> 3));
    return (bytes_[index >> 3] >> (7 - (index & 7))) & 1;
}

std::uint64_t BitStream::read_uint(std::uint64_t index, int width) const {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 1) | static_cast<std::uint64_t>(bit(index + i));
    return v;
}

BitStream BitStream::slice(std::uint64_t start, std::uint64_t len) const {
    if (start + len > nbits_)
        throw FormatError("bitstream: slice past end", static_cast<std::int64_t>(nbits_ >> 3));
    BitStream out;
    for (std::uint64_t i = 0; i < len; ++i) out.push_bit(bit(start + i));
    return out;
}

BitStream BitStream::from_bytes(const std::vector<std::uint8_t>& bytes, std::uint64_t nbits) {
    if (nbits > bytes.size() * 8ull)
        throw FormatError("bitstream: byte buffer shorter than declared bit count");
    BitStream out;
    out.bytes_.assign(bytes.begin(),
                      bytes.begin() + static_cast<std::ptrdiff_t>((nbits + 7) >> 3));
    out.nbits_ = nbits;
    // Clear padding bits so equality stays canonical.
    if (nbits & 7) out.bytes_.back() &= static_cast<std::uint8_t>(0xFF00u >> (nbits & 7));
    return out;
}

int BitStream::Reader::read_bit() { return bs_->bit(pos_++); }

std::uint64_t BitStream::Reader::read_uint(int width) {
    std::uint64_t v = bs_->read_uint(pos_, width);
    pos_ += static_cast<std::uint64_t>(width);
    return v;
}

}  // namespace rae
