// MSB-first bit buffer and the Elias-gamma integer code.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qprsgd {

// Ordered bit sequence, MSB-first within each emitted field.
class BitString {
  public:
    void push_bit(bool b) {
        if (nbits_ % 8 == 0) bytes_.push_back(0);
        if (b) bytes_.back() |= static_cast<std::uint8_t>(1u << (7 - nbits_ % 8));
        ++nbits_;
    }

    // Emit the low `width` bits of `value`, most significant first.
    void push_bits(std::uint64_t value, int width) {
        for (int i = width - 1; i >= 0; --i) push_bit((value >> i) & 1u);
    }

    bool bit(std::size_t i) const {
        return (bytes_[i / 8] >> (7 - i % 8)) & 1u;
    }

    std::size_t size() const { return nbits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

    void append(const BitString& other) {
        for (std::size_t i = 0; i < other.size(); ++i) push_bit(other.bit(i));
    }

  private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

class BitReader {
  public:
    explicit BitReader(const BitString& bs) : bs_(bs) {}

    bool read_bit() {
        if (pos_ >= bs_.size()) throw std::runtime_error("bitstream truncated");
        return bs_.bit(pos_++);
    }

    std::uint64_t read_bits(int width) {
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v = (v << 1) | (read_bit() ? 1u : 0u);
        return v;
    }

    std::size_t position() const { return pos_; }
    bool exhausted() const { return pos_ >= bs_.size(); }

  private:
    const BitString& bs_;
    std::size_t pos_ = 0;
};

// Elias-gamma code: floor(log2 k) zeros, then the binary representation of k.
// Length is exactly 2*floor(log2 k) + 1 bits.
inline void elias_encode(std::uint64_t k, BitString& out) {
    if (k == 0) throw std::invalid_argument("elias_encode: k must be positive");
    int n = 63 - __builtin_clzll(k);  // floor(log2 k)
    for (int i = 0; i < n; ++i) out.push_bit(false);
    out.push_bits(k, n + 1);
}

inline BitString elias_encode(std::uint64_t k) {
    BitString bs;
    elias_encode(k, bs);
    return bs;
}

inline std::uint64_t elias_decode(BitReader& in) {
    int zeros = 0;
    while (!in.read_bit()) {
        ++zeros;
        if (zeros > 63) throw std::runtime_error("elias_decode: malformed prefix");
    }
    std::uint64_t k = 1;
    for (int i = 0; i < zeros; ++i) k = (k << 1) | (in.read_bit() ? 1u : 0u);
    return k;
}

inline std::size_t elias_length(std::uint64_t k) {
    return 2 * static_cast<std::size_t>(63 - __builtin_clzll(k)) + 1;
}

}  // namespace qprsgd
