// Training loops: AR-QPRSGD, G-QPRSGD, the PSGD/PR-SGD/QSGD baselines, and
// the centralized PR-SGD reference used for equivalence checks. Execution is
// round-lockstep and fully deterministic: every stochastic draw is keyed by
// (worker, round, purpose).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qprsgd/collectives.hpp"
#include "qprsgd/objectives.hpp"
#include "qprsgd/quant.hpp"
#include "qprsgd/rng.hpp"
#include "qprsgd/simnet.hpp"
#include "qprsgd/topology.hpp"

namespace qprsgd {

enum class Algorithm { psgd, prsgd, qsgd, ar_qprsgd, g_qprsgd };
enum class Paradigm { allreduce, gossip };

struct RunConfig {
    int M = 4;
    int K = 1;
    int N = 100;
    std::uint32_t s = kLossless;  // 0 = identity compressor
    double gamma = 0.01;
    int batch = 16;
    std::uint64_t seed = 1;
    LinkModel link;
    bool check_invariants = true;
    double divergence_factor = 1e6;
};

struct RoundMetrics {
    int round = 0;
    double loss = 0.0;
    double grad_norm_sq = 0.0;
    double consensus = 0.0;  // (1/M) sum_m ||x~^(m) - x_bar||^2
    std::uint64_t cum_bits = 0;
    double sim_seconds = 0.0;
};

struct RunResult {
    std::vector<RoundMetrics> rounds;
    bool diverged = false;
    Vector final_average;  // x_bar after the last recorded round
};

// K local SGD steps from the synchronized point; returns the accumulated
// displacement g = x_0 - x_K = gamma * sum_k grad.
inline Vector local_epoch(const ObjectiveSuite& obj, int worker, const Vector& x_start, int K,
                          double gamma, int batch, Rng& rng) {
    Vector x = x_start;
    Vector g = Vector::Zero(x.size());
    for (int k = 0; k < K; ++k) {
        Vector grad = obj.stochastic_grad(worker, x, batch, rng);
        if (!grad.allFinite()) throw std::runtime_error("local_epoch: non-finite gradient");
        g += gamma * grad;
        x -= gamma * grad;
    }
    return g;
}

inline Rng epoch_rng(std::uint64_t seed, int worker, int round) {
    return Rng(seed, {static_cast<std::uint64_t>(StreamPurpose::minibatch),
                      static_cast<std::uint64_t>(worker), static_cast<std::uint64_t>(round)});
}

namespace detail {

inline RoundMetrics eval_round(const ObjectiveSuite& obj, const Vector& x_bar, int round,
                               std::uint64_t cum_bits, double sim_seconds, double consensus) {
    RoundMetrics m;
    m.round = round;
    m.loss = obj.global_loss(x_bar);
    m.grad_norm_sq = obj.global_grad(x_bar).squaredNorm();
    m.consensus = consensus;
    m.cum_bits = cum_bits;
    m.sim_seconds = sim_seconds;
    return m;
}

}  // namespace detail

// All workers hold an identical x~ throughout; updates travel through the
// quantized ring all-reduce and the assembled sum is averaged locally.
inline RunResult run_ar_qprsgd(const RunConfig& cfg, const ObjectiveSuite& obj) {
    RunResult res;
    Vector x_tilde = Vector::Zero(obj.d);
    auto plan = split_segments(obj.d, cfg.M);
    std::uint64_t cum_bits = 0;
    double sim_seconds = 0.0;
    double initial_loss = obj.global_loss(x_tilde);

    for (int n = 1; n <= cfg.N; ++n) {
        std::vector<Vector> updates(cfg.M);
        for (int m = 0; m < cfg.M; ++m) {
            Rng rng = epoch_rng(cfg.seed, m, n);
            updates[m] = local_epoch(obj, m, x_tilde, cfg.K, cfg.gamma, cfg.batch, rng);
        }
        auto ar = quantized_ring_allreduce(updates, cfg.s, plan, cfg.seed,
                                           static_cast<std::uint64_t>(n));
        x_tilde -= ar.sum / static_cast<double>(cfg.M);
        cum_bits += ar.trace.total_bits;
        sim_seconds += round_time_ar(ar.trace, cfg.M, cfg.link, cfg.K);

        res.rounds.push_back(detail::eval_round(obj, x_tilde, n, cum_bits, sim_seconds, 0.0));
        if (!std::isfinite(res.rounds.back().loss) ||
            res.rounds.back().loss > cfg.divergence_factor * std::max(initial_loss, 1.0)) {
            res.diverged = true;
            break;
        }
    }
    res.final_average = x_tilde;
    return res;
}

// Per-worker state for the gossip loop. Each worker tracks replicas of its
// neighbours' synchronized parameters (self included); replicas are advanced
// by the same dequantized deltas the owner applies, so they stay bit-exact.
struct GossipWorker {
    Vector x_tilde;
    std::vector<int> neighbors;              // j with W_mj != 0, j != m
    std::vector<std::pair<int, Vector>> replicas;  // includes self
};

inline RunResult run_g_qprsgd(const RunConfig& cfg, const ObjectiveSuite& obj,
                              const MixingMatrix& W) {
    if (W.size() != cfg.M) throw std::invalid_argument("run_g_qprsgd: W size mismatch");
    RunResult res;
    const int M = cfg.M;
    std::vector<GossipWorker> workers(M);
    for (int m = 0; m < M; ++m) {
        workers[m].x_tilde = Vector::Zero(obj.d);  // x_1 = 0 on every worker
        for (int j = 0; j < M; ++j)
            if (W.W(m, j) != 0.0) {
                if (j != m) workers[m].neighbors.push_back(j);
                workers[m].replicas.emplace_back(j, Vector::Zero(obj.d));
            }
    }

    std::uint64_t cum_bits = 0;
    double sim_seconds = 0.0;
    double initial_loss = obj.global_loss(Vector::Zero(obj.d));

    for (int n = 1; n <= cfg.N; ++n) {
        // compute phase: local epochs and quantized deltas
        std::vector<Vector> delta_deq(M);
        std::vector<std::size_t> bits(M);
        for (int m = 0; m < M; ++m) {
            Rng rng = epoch_rng(cfg.seed, m, n);
            Vector g = local_epoch(obj, m, workers[m].x_tilde, cfg.K, cfg.gamma, cfg.batch, rng);
            // x~_{n+1/2} = sum_j W_mj x~^(j) - x_0 + x_K, from this worker's replicas
            Vector x_half = Vector::Zero(obj.d);
            for (const auto& [j, rep] : workers[m].replicas) x_half += W.W(m, j) * rep;
            x_half -= g;  // x_K - x_0 = -g
            Vector delta = workers[m].x_tilde - x_half;
            if (cfg.s == kLossless) {
                delta_deq[m] = delta;
                bits[m] = message_bits_raw(obj.d);
            } else {
                Rng qrng(cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::quantize),
                                    static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(m)});
                auto block = quantize(delta, cfg.s, qrng);
                bits[m] = encoded_bits(block);
                delta_deq[m] = dequantize(after_wire(block));
            }
        }

        // communication phase: owner and every neighbour apply the same delta
        for (int m = 0; m < M; ++m) {
            workers[m].x_tilde -= delta_deq[m];
            for (auto& [j, rep] : workers[m].replicas) rep -= delta_deq[j];
        }

        if (cfg.check_invariants) {
            for (int m = 0; m < M; ++m)
                for (const auto& [j, rep] : workers[m].replicas)
                    if (!(rep.array() == workers[j].x_tilde.array()).all())
                        throw std::logic_error("gossip replica consistency violated");
        }

        std::size_t max_egress = 0;
        int max_degree = 0;
        for (int m = 0; m < M; ++m) {
            max_degree = std::max(max_degree, static_cast<int>(workers[m].neighbors.size()));
            max_egress = std::max(max_egress, bits[m]);
            cum_bits += workers[m].neighbors.size() * bits[m];
        }
        sim_seconds += round_time_gossip(max_degree, max_egress, cfg.link, cfg.K);

        Vector x_bar = Vector::Zero(obj.d);
        for (int m = 0; m < M; ++m) x_bar += workers[m].x_tilde;
        x_bar /= static_cast<double>(M);
        double consensus = 0.0;
        for (int m = 0; m < M; ++m) consensus += (workers[m].x_tilde - x_bar).squaredNorm();
        consensus /= static_cast<double>(M);

        res.rounds.push_back(detail::eval_round(obj, x_bar, n, cum_bits, sim_seconds, consensus));
        if (!std::isfinite(res.rounds.back().loss) ||
            res.rounds.back().loss > cfg.divergence_factor * std::max(initial_loss, 1.0)) {
            res.diverged = true;
            res.final_average = x_bar;
            return res;
        }
        if (n == cfg.N) res.final_average = x_bar;
    }
    return res;
}

// Centralized PR-SGD oracle: a parameter-server loop applying the exact mean
// update in fixed worker order. Used for lossless equivalence testing.
inline RunResult run_centralized_prsgd(const RunConfig& cfg, const ObjectiveSuite& obj) {
    RunResult res;
    Vector x_tilde = Vector::Zero(obj.d);
    for (int n = 1; n <= cfg.N; ++n) {
        Vector sum = Vector::Zero(obj.d);
        for (int m = 0; m < cfg.M; ++m) {
            Rng rng = epoch_rng(cfg.seed, m, n);
            sum += local_epoch(obj, m, x_tilde, cfg.K, cfg.gamma, cfg.batch, rng);
        }
        x_tilde -= sum / static_cast<double>(cfg.M);
        res.rounds.push_back(detail::eval_round(obj, x_tilde, n, 0, 0.0, 0.0));
    }
    res.final_average = x_tilde;
    return res;
}

// Baselines sharing the metrics schema: psgd forces K = 1 and no
// quantization, prsgd keeps K but drops quantization, qsgd forces K = 1 and
// keeps quantization.
inline RunResult run_baseline(Algorithm kind, Paradigm paradigm, RunConfig cfg,
                              const ObjectiveSuite& obj, const MixingMatrix* W = nullptr) {
    switch (kind) {
        case Algorithm::psgd:
            cfg.K = 1;
            cfg.s = kLossless;
            break;
        case Algorithm::prsgd:
            cfg.s = kLossless;
            break;
        case Algorithm::qsgd:
            cfg.K = 1;
            break;
        default:
            throw std::invalid_argument("run_baseline: not a baseline algorithm");
    }
    if (paradigm == Paradigm::allreduce) return run_ar_qprsgd(cfg, obj);
    if (W == nullptr) throw std::invalid_argument("run_baseline: gossip needs a mixing matrix");
    return run_g_qprsgd(cfg, obj, *W);
}

}  // namespace qprsgd
