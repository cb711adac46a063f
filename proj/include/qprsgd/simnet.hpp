// Bit-exact communication accounting and a deterministic simulated-time
// model. Compute time is a configured constant per local step, not measured
// wall clock.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qprsgd/collectives.hpp"
#include "qprsgd/quant.hpp"

namespace qprsgd {

struct LinkModel {
    double bandwidth_bps = 100e6;        // bits per second
    double latency_s = 0.0;              // per message
    double compute_s_per_local_step = 1e-3;
};

inline std::size_t message_bits_raw(Eigen::Index d) {
    return 32 * static_cast<std::size_t>(d);
}

inline std::size_t message_bits(const QuantizedBlock& b) { return encoded_bits(b); }

// 2(M-1) sequential pipeline steps; within a step the M segment pipelines
// advance concurrently, so the step lasts as long as its largest hop.
inline double round_time_ar(const CollectiveTrace& trace, int M, const LinkModel& link, int K) {
    double t = static_cast<double>(K) * link.compute_s_per_local_step;
    if (M <= 1) return t;
    std::vector<std::size_t> step_max(2 * (M - 1), 0);
    for (const auto& h : trace.hops) {
        if (h.step < 0 || h.step >= static_cast<int>(step_max.size()))
            throw std::invalid_argument("round_time_ar: hop step out of range");
        step_max[h.step] = std::max(step_max[h.step], h.bits);
    }
    for (auto bits : step_max)
        t += link.latency_s + static_cast<double>(bits) / link.bandwidth_bps;
    return t;
}

// Workers exchange with all neighbours concurrently; each worker's egress is
// serialized, so the round lasts as long as the busiest worker.
inline double round_time_gossip(int max_degree, std::size_t max_edge_bits,
                                const LinkModel& link, int K) {
    double t = static_cast<double>(K) * link.compute_s_per_local_step;
    if (max_degree > 0)
        t += link.latency_s +
             static_cast<double>(max_degree) * static_cast<double>(max_edge_bits) /
                 link.bandwidth_bps;
    return t;
}

}  // namespace qprsgd
