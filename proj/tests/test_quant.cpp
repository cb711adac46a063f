// Quantizer and codec unit tests.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "qprsgd/quant.hpp"

using namespace qprsgd;

namespace {

std::string to_string(const BitString& bs) {
    std::string s;
    for (std::size_t i = 0; i < bs.size(); ++i) s += bs.bit(i) ? '1' : '0';
    return s;
}

Vector random_vec(Eigen::Index d, Rng& rng) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.gaussian();
    return v;
}

}  // namespace

TEST_CASE("elias gamma reference table") {
    CHECK(to_string(elias_encode(1)) == "1");
    CHECK(to_string(elias_encode(2)) == "010");
    CHECK(to_string(elias_encode(5)) == "00101");
    CHECK(elias_length(1) == 1);
    CHECK(elias_length(2) == 3);
    CHECK(elias_length(5) == 5);
    CHECK_THROWS(elias_encode(0));
}

TEST_CASE("elias roundtrip exhaustive to 2^16") {
    for (std::uint64_t k = 1; k <= (1u << 16); ++k) {
        BitString bs = elias_encode(k);
        REQUIRE(bs.size() == elias_length(k));
        BitReader r(bs);
        REQUIRE(elias_decode(r) == k);
        REQUIRE(r.exhausted());
    }
}

TEST_CASE("elias decode rejects truncated input") {
    BitString bs = elias_encode(5);
    BitString cut;
    for (std::size_t i = 0; i + 1 < bs.size(); ++i) cut.push_bit(bs.bit(i));
    BitReader r(cut);
    CHECK_THROWS(elias_decode(r));
}

TEST_CASE("block encoding lengths match hand sums") {
    // d=4, levels [1,1,0,0], all positive: 32 + 4 signs + (3+3+1+1) elias bits
    QuantizedBlock b;
    b.norm = 2.5;
    b.s = 2;
    b.signs = {1, 1, 1, 1};
    b.levels = {1, 1, 0, 0};
    CHECK(encode_block(b).size() == 44);
    CHECK(encoded_bits(b) == 44);

    QuantizedBlock z;
    z.norm = 0.0;
    z.s = 4;
    z.signs = {1, 1, 1};
    z.levels = {0, 0, 0};
    CHECK(encode_block(z).size() == 38);
}

TEST_CASE("block codec identity over random blocks") {
    Rng rng(42, {1});
    for (int t = 0; t < 1000; ++t) {
        Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(40));
        std::uint32_t s = 1 + static_cast<std::uint32_t>(rng.below(16));
        Rng qr(42, {2, static_cast<std::uint64_t>(t)});
        auto b = quantize(random_vec(d, rng), s, qr);
        auto back = decode_block(encode_block(b), d, s);
        REQUIRE(back.levels == b.levels);
        REQUIRE(back.signs == b.signs);
        REQUIRE(static_cast<float>(back.norm) == static_cast<float>(b.norm));
        REQUIRE(back.s == s);
    }
}

TEST_CASE("decode rejects trailing bits and truncation") {
    QuantizedBlock b;
    b.norm = 1.0;
    b.s = 1;
    b.signs = {1, -1};
    b.levels = {1, 0};
    BitString bs = encode_block(b);
    BitString longer = bs;
    longer.push_bit(true);
    CHECK_THROWS(decode_block(longer, 2, 1));
    BitString shorter;
    for (std::size_t i = 0; i + 1 < bs.size(); ++i) shorter.push_bit(bs.bit(i));
    CHECK_THROWS(decode_block(shorter, 2, 1));
}

TEST_CASE("quantize trivial cases") {
    Rng rng(7, {1});
    Vector zero = Vector::Zero(3);
    auto bz = quantize(zero, 4, rng);
    CHECK(bz.norm == 0.0);
    CHECK(dequantize(bz).isZero(0.0));

    Vector grid(3);
    grid << 5, 0, 0;
    for (int t = 0; t < 50; ++t) {
        Rng qr(7, {2, static_cast<std::uint64_t>(t)});
        Vector q = dequantize(quantize(grid, 1, qr));
        REQUIRE(q[0] == Catch::Approx(5.0).margin(1e-12));
        REQUIRE(q[1] == 0.0);
        REQUIRE(q[2] == 0.0);
    }
}

TEST_CASE("dequantize direct formula") {
    QuantizedBlock b;
    b.norm = 5.0;
    b.s = 1;
    b.signs = {1, 1};
    b.levels = {1, 0};
    Vector q = dequantize(b);
    CHECK(q[0] == 5.0);
    CHECK(q[1] == 0.0);
}

TEST_CASE("two-outcome distribution for [3,4] at s=1") {
    // norm 5: coordinate 0 hits level 1 (value 5) with p = 3/5, coordinate 1 with p = 4/5
    const int n = 100000;
    int hits0 = 0, hits1 = 0;
    Vector v(2);
    v << 3, 4;
    for (int t = 0; t < n; ++t) {
        Rng qr(11, {3, static_cast<std::uint64_t>(t)});
        auto b = quantize(v, 1, qr);
        hits0 += b.levels[0];
        hits1 += b.levels[1];
    }
    // 4-sigma band, sigma = sqrt(p(1-p)/n) < 0.0016
    CHECK(std::abs(hits0 / double(n) - 0.6) < 0.0065);
    CHECK(std::abs(hits1 / double(n) - 0.8) < 0.0065);
}

TEST_CASE("unbiasedness and second moment on random vectors") {
    Rng gen(3, {1});
    Vector v = random_vec(16, gen);
    const int n = 20000;
    Vector mean = Vector::Zero(16);
    double err2 = 0.0;
    for (int t = 0; t < n; ++t) {
        Rng qr(3, {2, static_cast<std::uint64_t>(t)});
        Vector q = dequantize(quantize(v, 2, qr));
        mean += q;
        err2 += (q - v).squaredNorm();
    }
    mean /= n;
    // crude per-coordinate band: coordinate std is bounded by norm/s
    double band = 4.0 * v.norm() / 2.0 / std::sqrt(double(n));
    for (int i = 0; i < 16; ++i) REQUIRE(std::abs(mean[i] - v[i]) < band);
    CHECK(err2 / n <= 16.0 / (4.0 * 4.0) * v.squaredNorm() * 1.01);
}

TEST_CASE("scale equivariance of the quantization grid") {
    Rng gen(5, {1});
    Vector v = random_vec(8, gen);
    Rng a(5, {9, 0}), b(5, {9, 0});  // identical streams
    auto qa = quantize(v, 4, a);
    auto qb = quantize(3.0 * v, 4, b);
    CHECK(qa.levels == qb.levels);
    CHECK(qa.signs == qb.signs);
    CHECK(qb.norm == Catch::Approx(3.0 * qa.norm).epsilon(1e-14));
}

TEST_CASE("sparsity bound fixtures") {
    CHECK(sparsity_bound(1024, 1) == Catch::Approx(33.0));
    CHECK(sparsity_bound(4, 4) == 4.0);  // capped at d
}

TEST_CASE("expected code length bound fixture and monotonicity") {
    double b = expected_code_length_bound(1024, 1);
    CHECK(b == Catch::Approx(32.0 + 2048.0 + 1024.0 * std::log2(1090.25 / 1024.0)).epsilon(1e-12));
    CHECK(b == Catch::Approx(2172.6).margin(0.1));
    for (std::uint32_t s = 1; s < 40; ++s)
        CHECK(expected_code_length_bound(256, s + 1) >= expected_code_length_bound(256, s));
}

TEST_CASE("empirical code length within bound") {
    Rng gen(13, {1});
    double acc = 0.0;
    const int n = 2000;
    for (int t = 0; t < n; ++t) {
        Vector v = random_vec(128, gen);
        Rng qr(13, {2, static_cast<std::uint64_t>(t)});
        acc += static_cast<double>(encoded_bits(quantize(v, 4, qr)));
    }
    CHECK(acc / n <= expected_code_length_bound(128, 4));
}

TEST_CASE("after_wire narrows norm to binary32") {
    QuantizedBlock b;
    b.norm = 1.000000059604644775390625e0 + 1e-12;
    b.s = 1;
    b.signs = {1};
    b.levels = {1};
    auto w = after_wire(b);
    CHECK(w.norm == static_cast<double>(static_cast<float>(b.norm)));
}
