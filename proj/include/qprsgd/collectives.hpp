// Ring all-reduce with per-hop recursive quantization: reduce-scatter passes
// a running quantized partial sum around the ring, all-gather forwards the
// finished blocks verbatim. Every quantization draw is keyed by
// (round, segment, hop), so the whole collective replays identically in any
// execution order.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qprsgd/bounds.hpp"
#include "qprsgd/quant.hpp"
#include "qprsgd/rng.hpp"

namespace qprsgd {

// s = 0 disables quantization (identity compressor, 32-bit payloads).
inline constexpr std::uint32_t kLossless = 0;

struct SegmentPlan {
    Eigen::Index d = 0;
    int M = 1;
    // boundaries[i] = [offset, length) of segment i; contiguous cover of [0, d)
    std::vector<std::pair<Eigen::Index, Eigen::Index>> segments;
};

// First (d mod M) segments get ceil(d/M) elements, the rest floor(d/M).
inline SegmentPlan split_segments(Eigen::Index d, int M) {
    if (M < 1 || d < M) throw std::invalid_argument("split_segments: need d >= M >= 1");
    SegmentPlan plan;
    plan.d = d;
    plan.M = M;
    Eigen::Index base = d / M, extra = d % M, off = 0;
    for (int i = 0; i < M; ++i) {
        Eigen::Index len = base + (i < extra ? 1 : 0);
        plan.segments.emplace_back(off, len);
        off += len;
    }
    return plan;
}

struct HopRecord {
    int step;     // pipeline step, 0 .. 2(M-1)-1
    int sender;
    int receiver;
    int segment;
    std::size_t bits;
};

struct CollectiveTrace {
    std::vector<HopRecord> hops;
    std::size_t total_bits = 0;
    int hop_count() const { return static_cast<int>(hops.size()); }
};

struct AllreduceResult {
    Vector sum;  // the assembled (still un-averaged) quantized sum, identical on every worker
    CollectiveTrace trace;
};

// Segment j is owned by worker j and visits workers j, j-1, ..., j+1 (mod M);
// every visit re-quantizes the partial sum with a fresh norm. Lossless mode
// accumulates in fixed worker order 0..M-1 so a centralized reference loop
// can reproduce the result exactly.
inline AllreduceResult quantized_ring_allreduce(const std::vector<Vector>& updates,
                                                std::uint32_t s, const SegmentPlan& plan,
                                                std::uint64_t seed, std::uint64_t round = 0) {
    const int M = plan.M;
    if (static_cast<int>(updates.size()) != M)
        throw std::invalid_argument("quantized_ring_allreduce: need M update vectors");
    for (const auto& u : updates)
        if (u.size() != plan.d)
            throw std::invalid_argument("quantized_ring_allreduce: mismatched vector length");

    AllreduceResult res;
    res.sum = Vector::Zero(plan.d);

    if (s == kLossless) {
        for (int m = 0; m < M; ++m) res.sum += updates[m];
        for (int j = 0; j < M && M > 1; ++j) {
            auto [off, len] = plan.segments[j];
            std::size_t bits = 32 * static_cast<std::size_t>(len);
            for (int i = 0; i < M - 1; ++i) {
                int sender = (j - i + M) % M;
                res.trace.hops.push_back({i, sender, (sender + M - 1) % M, j, bits});
            }
            for (int i = 0; i < M - 1; ++i) {
                int sender = (j + 1 + i) % M;
                res.trace.hops.push_back({M - 1 + i, sender, (sender + M - 1) % M, j, bits});
            }
        }
        if (M == 1) res.sum = updates[0];
        for (const auto& h : res.trace.hops) res.trace.total_bits += h.bits;
        return res;
    }

    for (int j = 0; j < M; ++j) {
        auto [off, len] = plan.segments[j];
        Vector partial = Vector::Zero(len);
        QuantizedBlock block;
        std::size_t final_bits = 0;
        for (int i = 0; i < M; ++i) {
            int worker = (j - i + M) % M;
            partial += updates[worker].segment(off, len);
            Rng hop_rng(seed, {static_cast<std::uint64_t>(StreamPurpose::quantize), round,
                               static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)});
            block = quantize(partial, s, hop_rng);
            final_bits = encoded_bits(block);
            if (i < M - 1) {
                // reduce-scatter hop: receiver dequantizes off the wire
                res.trace.hops.push_back({i, worker, (worker + M - 1) % M, j, final_bits});
                partial = dequantize(after_wire(block));
            }
        }
        // the stored segment is the exact dequantization of the last block
        res.sum.segment(off, len) = dequantize(after_wire(block));
        // all-gather: the finished block travels M-1 hops verbatim
        for (int i = 0; i < M - 1; ++i) {
            int sender = (j + 1 + i) % M;
            res.trace.hops.push_back({M - 1 + i, sender, (sender + M - 1) % M, j, final_bits});
        }
    }
    for (const auto& h : res.trace.hops) res.trace.total_bits += h.bits;
    return res;
}

struct Lemma1Report {
    double empirical_second_moment = 0.0;
    double bound = 0.0;
    double margin = 0.0;  // bound - empirical; pass when positive
    double std_error = 0.0;
    bool pass = false;
};

// Monte Carlo check of the recursive-compression bound: fixed inputs, fresh
// quantization randomness per trial.
inline Lemma1Report verify_lemma1(Eigen::Index d, std::uint32_t s, int M, int trials,
                                  std::uint64_t seed) {
    if (trials < 10000) throw std::invalid_argument("verify_lemma1: need >= 10^4 trials");
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    std::vector<Vector> w(M);
    double sum_sq_norms = 0.0;
    Vector mean = Vector::Zero(d);
    for (int m = 0; m < M; ++m) {
        w[m] = Vector(d);
        for (Eigen::Index i = 0; i < d; ++i) w[m][i] = gen.gaussian();
        sum_sq_norms += w[m].squaredNorm();
        mean += w[m];
    }
    mean /= static_cast<double>(M);

    auto plan = split_segments(d, M);
    double acc = 0.0, acc_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto r = quantized_ring_allreduce(w, s, plan, seed, static_cast<std::uint64_t>(t));
        double err = (r.sum / static_cast<double>(M) - mean).squaredNorm();
        acc += err;
        acc_sq += err * err;
    }
    Lemma1Report rep;
    rep.empirical_second_moment = acc / trials;
    double var = acc_sq / trials - rep.empirical_second_moment * rep.empirical_second_moment;
    rep.std_error = std::sqrt(std::max(0.0, var) / trials);
    rep.bound = 2.0 * c1(d, s, M) / M * sum_sq_norms;
    rep.margin = rep.bound - rep.empirical_second_moment;
    rep.pass = rep.margin >= 0.0;
    return rep;
}

}  // namespace qprsgd
