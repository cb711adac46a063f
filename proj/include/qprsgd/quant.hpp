// QSGD stochastic quantizer and its wire codec.
//
// A vector is represented by its l2 norm, per-coordinate signs, and integer
// levels in [0, s]. On the wire the norm travels as IEEE-754 binary32 and
// each level as Elias-gamma of (level + 1) preceded by one sign bit.
#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qprsgd/bitstream.hpp"
#include "qprsgd/rng.hpp"

namespace qprsgd {

using Vector = Eigen::VectorXd;

struct QuantizedBlock {
    double norm = 0.0;                // l2 norm of the source vector
    std::vector<std::int8_t> signs;   // -1 or +1
    std::vector<std::uint32_t> levels;  // each in [0, s]
    std::uint32_t s = 1;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(levels.size()); }
};

inline QuantizedBlock quantize(const Vector& v, std::uint32_t s, Rng& rng) {
    if (s == 0) throw std::invalid_argument("quantize: s must be positive");
    if (v.size() < 1) throw std::invalid_argument("quantize: empty vector");
    if (!v.allFinite()) throw std::invalid_argument("quantize: non-finite component");

    QuantizedBlock b;
    b.s = s;
    b.norm = v.norm();
    b.signs.resize(v.size());
    b.levels.resize(v.size());

    for (Eigen::Index i = 0; i < v.size(); ++i) {
        b.signs[i] = v[i] < 0.0 ? -1 : 1;
        if (b.norm == 0.0) {
            b.levels[i] = 0;
            continue;
        }
        double rs = std::abs(v[i]) / b.norm * s;  // in [0, s]
        double ell = std::floor(rs);
        double p = rs - ell;  // 0 when exactly on a grid point
        std::uint32_t level = static_cast<std::uint32_t>(ell);
        if (level >= s) {
            level = s;  // rs == s exactly
        } else if (rng.uniform() < p) {
            level += 1;
        }
        b.levels[i] = level;
    }
    return b;
}

inline Vector dequantize(const QuantizedBlock& b) {
    Vector v(b.dim());
    const double scale = b.norm / static_cast<double>(b.s);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = scale * b.signs[i] * static_cast<double>(b.levels[i]);
    return v;
}

// Wire format: binary32 norm MSB-first, then per coordinate one sign bit
// (1 = negative) and Elias-gamma of level + 1.
inline BitString encode_block(const QuantizedBlock& b) {
    BitString out;
    out.push_bits(std::bit_cast<std::uint32_t>(static_cast<float>(b.norm)), 32);
    for (std::size_t i = 0; i < b.levels.size(); ++i) {
        out.push_bit(b.signs[i] < 0);
        elias_encode(b.levels[i] + 1, out);
    }
    return out;
}

inline std::size_t encoded_bits(const QuantizedBlock& b) {
    std::size_t n = 32;
    for (auto lvl : b.levels) n += 1 + elias_length(lvl + 1);
    return n;
}

inline QuantizedBlock decode_block(const BitString& bits, Eigen::Index d, std::uint32_t s) {
    BitReader in(bits);
    QuantizedBlock b;
    b.s = s;
    b.norm = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(in.read_bits(32))));
    b.signs.resize(d);
    b.levels.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        b.signs[i] = in.read_bit() ? -1 : 1;
        std::uint64_t lvl = elias_decode(in) - 1;
        if (lvl > s) throw std::runtime_error("decode_block: level exceeds s");
        b.levels[i] = static_cast<std::uint32_t>(lvl);
    }
    if (!in.exhausted()) throw std::runtime_error("decode_block: trailing bits (wrong d?)");
    return b;
}

// Narrow the norm to binary32 the way a network hop would, without paying for
// bit serialization. Used by simulation paths that count bits separately.
inline QuantizedBlock after_wire(QuantizedBlock b) {
    b.norm = static_cast<double>(static_cast<float>(b.norm));
    return b;
}

// E||Q_s(v)||_0 <= min(s^2 + s*sqrt(d), d).
inline double sparsity_bound(Eigen::Index d, std::uint32_t s) {
    double ds = static_cast<double>(d);
    return std::min(static_cast<double>(s) * s + s * std::sqrt(ds), ds);
}

// Expected encoded size in bits: F + 2d + d*log2((s^2 + 2s*sqrt(d) + 1 + d + 1/4)/d),
// with F = 32 for the norm field. The numerator expands E||y+1||_2^2 for the
// level vector y (the d term comes from the all-ones shift; 1/4 bounds the
// stochastic-rounding variance term).
inline double expected_code_length_bound(Eigen::Index d, std::uint32_t s) {
    double ds = static_cast<double>(d);
    double sv = static_cast<double>(s);
    return 32.0 + 2.0 * ds +
           ds * std::log2((sv * sv + 2.0 * sv * std::sqrt(ds) + 1.0 + ds + 0.25) / ds);
}

}  // namespace qprsgd
