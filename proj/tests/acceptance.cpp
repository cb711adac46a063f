// End-to-end acceptance gate: one pass/fail line per criterion.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <vector>

#include "qprsgd/algorithms.hpp"
#include "qprsgd/bounds.hpp"
#include "qprsgd/metrics.hpp"

using namespace qprsgd;

namespace {

int failures = 0;

void report(int id, bool pass, const char* fmt, ...) {
    std::printf("criterion %2d: %s (", id, pass ? "PASS" : "FAIL");
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stdout, fmt, args);
    va_end(args);
    std::printf(")\n");
    std::fflush(stdout);
    if (!pass) ++failures;
}

Vector random_vec(Eigen::Index d, Rng& rng) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.gaussian();
    return v;
}

// Criteria 1 and 2: quantizer unbiasedness (per-coordinate z-scores) and the
// variance bound E||Q(v)-v||^2 <= (d/4s^2)||v||^2 * 1.01, on a shared corpus.
void criteria_1_2() {
    const Eigen::Index d = 32;
    const int n_vectors = 50, draws = 100000;
    double worst_z = 0.0, worst_moment_ratio = 0.0;
    bool pass1 = true, pass2 = true;
    for (std::uint32_t s : {1u, 4u, 16u}) {
        for (int vi = 0; vi < n_vectors; ++vi) {
            Rng gen(100 + vi, {static_cast<std::uint64_t>(StreamPurpose::data_gen), s});
            Vector v = random_vec(d, gen);
            Vector s1 = Vector::Zero(d), s2 = Vector::Zero(d);
            double err2 = 0.0;
            for (int t = 0; t < draws; ++t) {
                Rng qr(100 + vi, {static_cast<std::uint64_t>(StreamPurpose::quantize), s,
                                  static_cast<std::uint64_t>(t)});
                Vector q = dequantize(quantize(v, s, qr));
                s1 += q;
                s2 += q.cwiseProduct(q);
                err2 += (q - v).squaredNorm();
            }
            for (Eigen::Index i = 0; i < d; ++i) {
                double mean = s1[i] / draws;
                double var = s2[i] / draws - mean * mean;
                if (var <= 0.0) continue;  // degenerate coordinate: exactly reproduced
                double z = std::abs(mean - v[i]) / std::sqrt(var / draws);
                worst_z = std::max(worst_z, z);
            }
            double bound = static_cast<double>(d) / (4.0 * s * s) * v.squaredNorm();
            worst_moment_ratio = std::max(worst_moment_ratio, err2 / draws / bound);
        }
    }
    pass1 = worst_z < 4.0;
    pass2 = worst_moment_ratio <= 1.01;
    report(1, pass1, "max z-score %.3f < 4 over 150 vectors x 1e5 draws", worst_z);
    report(2, pass2, "max empirical/bound second-moment ratio %.4f <= 1.01", worst_moment_ratio);
}

// Criteria 3 and 4: sparsity bound and code-length bound on the d x s grid,
// plus exact codec roundtrips.
void criteria_3_4() {
    bool pass3 = true, pass4 = true;
    int roundtrips = 0;
    double worst_sparsity = 0.0, worst_codelen = 0.0;
    for (Eigen::Index d : {64, 1024}) {
        for (std::uint32_t s : {1u, 4u}) {
            const int draws = 10000;
            double l0 = 0.0, bits = 0.0;
            for (int t = 0; t < draws; ++t) {
                Rng gen(200, {static_cast<std::uint64_t>(d), s, static_cast<std::uint64_t>(t)});
                Vector v = random_vec(d, gen);
                Rng qr(201, {static_cast<std::uint64_t>(d), s, static_cast<std::uint64_t>(t)});
                auto b = quantize(v, s, qr);
                for (auto lvl : b.levels) l0 += lvl != 0 ? 1.0 : 0.0;
                auto enc = encode_block(b);
                bits += static_cast<double>(enc.size());
                if (roundtrips < 10000 && t < 2500) {
                    ++roundtrips;
                    auto back = decode_block(enc, d, s);
                    if (back.levels != b.levels || back.signs != b.signs ||
                        static_cast<float>(back.norm) != static_cast<float>(b.norm))
                        pass4 = false;
                }
            }
            worst_sparsity = std::max(worst_sparsity, l0 / draws / sparsity_bound(d, s));
            worst_codelen = std::max(worst_codelen, bits / draws / expected_code_length_bound(d, s));
        }
    }
    pass3 = worst_sparsity <= 1.02;
    if (worst_codelen > 1.0) pass4 = false;
    report(3, pass3, "max empirical/bound L0 ratio %.4f <= 1.02", worst_sparsity);
    report(4, pass4, "max empirical/bound code-length ratio %.4f <= 1, %d exact roundtrips",
           worst_codelen, roundtrips);
}

void criterion_5() {
    auto a = verify_lemma1(8, 2, 4, 100000, 11);
    auto b = verify_lemma1(16, 4, 8, 100000, 13);
    report(5, a.pass && b.pass,
           "pipeline error %.4f <= bound %.4f (d=8,M=4,s=2); %.4f <= %.4f (d=16,M=8,s=4)",
           a.empirical_second_moment, a.bound, b.empirical_second_moment, b.bound);
}

// Criterion 6: with the identity compressor, the distributed loops reproduce a
// centralized parameter-server reference trajectory.
void criterion_6() {
    auto obj = make_quadratic(4, 8, 0.0, 24, 61);
    RunConfig cfg;
    cfg.M = 4;
    cfg.K = 4;
    cfg.s = kLossless;
    cfg.gamma = 0.05;
    cfg.batch = 64;  // full batch: identical shards give identical gradient maps
    cfg.seed = 61;
    auto W = complete_mixing(4);

    double worst_ar = 0.0, worst_gossip = 0.0;
    for (int n = 1; n <= 100; ++n) {
        cfg.N = n;
        Vector ref = run_centralized_prsgd(cfg, obj).final_average;
        worst_ar = std::max(worst_ar,
                            (run_ar_qprsgd(cfg, obj).final_average - ref).cwiseAbs().maxCoeff());
        worst_gossip = std::max(
            worst_gossip, (run_g_qprsgd(cfg, obj, W).final_average - ref).cwiseAbs().maxCoeff());
    }
    report(6, worst_ar < 1e-12 && worst_gossip < 1e-12,
           "max |x_bar - reference| over 100 rounds: AR %.2e, gossip %.2e < 1e-12", worst_ar,
           worst_gossip);
}

// Criteria 7 and 8: convergence parity on logistic regression, then the bit
// counters on the same configuration scaled to d=16384.
void criteria_7_8() {
    auto obj = make_logreg(4, 20, 64, 3.0, 71);
    double L = estimate_profile(obj, 10, 71).L;
    RunConfig cfg;
    cfg.M = 4;
    cfg.K = 4;
    cfg.N = 2000;
    cfg.batch = 16;
    cfg.seed = 71;
    cfg.gamma = 0.5 / L;

    RunConfig q = cfg;
    q.s = 16;
    double loss_prsgd = run_baseline(Algorithm::prsgd, Paradigm::allreduce, cfg, obj)
                            .rounds.back().loss;
    double loss_arq = run_ar_qprsgd(q, obj).rounds.back().loss;
    RunConfig k1 = cfg;
    k1.K = 1;
    RunConfig k1q = q;
    k1q.K = 1;
    double loss_psgd = run_baseline(Algorithm::psgd, Paradigm::allreduce, k1, obj)
                           .rounds.back().loss;
    double loss_qsgd = run_baseline(Algorithm::qsgd, Paradigm::allreduce, k1q, obj)
                           .rounds.back().loss;
    double rel_a = std::abs(loss_arq - loss_prsgd) / loss_prsgd;
    double rel_b = std::abs(loss_qsgd - loss_psgd) / loss_psgd;
    report(7, rel_a < 0.02 && rel_b < 0.02,
           "final-loss gaps: ar-qprsgd vs prsgd %.4f%%, qsgd vs psgd %.4f%% < 2%%", 100 * rel_a,
           100 * rel_b);

    // criterion 8: same shape at d=16384, s=4, equal round count
    auto big = make_logreg(4, 16384, 64, 3.0, 73);
    RunConfig b = cfg;
    b.N = 5;
    b.gamma = 0.5 / estimate_profile(big, 10, 73).L;
    RunConfig bq = b;
    bq.s = 4;
    auto bits_prsgd = run_baseline(Algorithm::prsgd, Paradigm::allreduce, b, big)
                          .rounds.back().cum_bits;
    auto bits_arq = run_ar_qprsgd(bq, big).rounds.back().cum_bits;
    double ratio = static_cast<double>(bits_arq) / static_cast<double>(bits_prsgd);
    report(8, ratio <= 0.10, "quantized traffic %.2f%% of 32-bit traffic at equal rounds",
           100 * ratio);
}

// Criterion 9: linear speedup — rounds to grad-norm-squared 1e-3 with M=8
// must be at most 0.625x the M=4 figure, same per-worker data volume.
void criterion_9() {
    const double gamma0 = 0.5;  // frozen after calibration: the M=4 noise floor
    // sits just under the 1e-3 threshold, so the speedup shows in first-passage time
    auto run_for = [&](int M) {
        auto obj = make_quadratic(M, 16, 0.0, 512, 91);
        RunConfig cfg;
        cfg.M = M;
        cfg.K = 1;
        cfg.N = 5000;
        cfg.batch = 1;
        cfg.seed = 91;
        cfg.gamma = gamma0 * std::sqrt(static_cast<double>(M) / 4.0);
        auto res = run_ar_qprsgd(cfg, obj);
        return find_crossing(res.rounds, ThresholdMetric::grad_norm_sq, 1e-3);
    };
    auto c4 = run_for(4);
    auto c8 = run_for(8);
    bool pass = c4.crossed && c8.crossed && c8.rounds <= 0.625 * c4.rounds;
    report(9, pass, "rounds to 1e-3: M=8 %.0f vs M=4 %.0f, ratio %.3f <= 0.625", c8.rounds,
           c4.rounds, c4.crossed && c8.crossed ? c8.rounds / c4.rounds : -1.0);
}

// Criterion 10: simulated-time ordering at 5 Mbps on the gossip ring, and the
// bandwidth robustness of the quantized variant.
void criterion_10() {
    auto obj = make_quadratic(4, 48, 0.0, 256, 101);
    double L = estimate_profile(obj, 10, 101).L;
    auto W = ring_mixing(4, 0.5);  // with d=48, s=16: feasible compression noise
    const double threshold = 1e-3;  // on grad_norm_sq; frozen after calibration

    auto run_arm = [&](Algorithm kind, std::uint32_t s, int K, double mbps) {
        RunConfig cfg;
        cfg.M = 4;
        cfg.K = K;
        cfg.N = 8000;
        cfg.s = s;
        cfg.batch = 8;
        cfg.seed = 101;
        cfg.gamma = 0.3 / L;
        cfg.link.bandwidth_bps = mbps * 1e6;
        cfg.link.latency_s = 0.0;
        cfg.link.compute_s_per_local_step = 1e-4;
        auto res = kind == Algorithm::g_qprsgd
                       ? run_g_qprsgd(cfg, obj, W)
                       : run_baseline(kind, Paradigm::gossip, cfg, obj, &W);
        return find_crossing(res.rounds, ThresholdMetric::grad_norm_sq, threshold);
    };

    auto g5 = run_arm(Algorithm::g_qprsgd, 16, 4, 5.0);
    auto pr5 = run_arm(Algorithm::prsgd, kLossless, 4, 5.0);
    auto ps5 = run_arm(Algorithm::psgd, kLossless, 1, 5.0);
    auto g100 = run_arm(Algorithm::g_qprsgd, 16, 4, 100.0);

    bool ordered = g5.crossed && pr5.crossed && ps5.crossed && g5.seconds < pr5.seconds &&
                   pr5.seconds < ps5.seconds;
    bool robust = g5.crossed && g100.crossed && g5.seconds <= 1.5 * g100.seconds;
    report(10, ordered && robust,
           "time-to-threshold at 5 Mbps: g-qprsgd %.4fs < prsgd %.4fs < psgd %.4fs; "
           "5/100 Mbps ratio %.3f <= 1.5",
           g5.seconds, pr5.seconds, ps5.seconds,
           g100.crossed ? g5.seconds / g100.seconds : -1.0);
}

void criterion_11() {
    auto obj = make_quadratic(4, 32, 0.2, 128, 111);
    RunConfig cfg;
    cfg.M = 4;
    cfg.K = 4;
    cfg.N = 500;
    cfg.s = 16;
    cfg.batch = 8;
    cfg.seed = 111;
    cfg.gamma = 0.05;
    cfg.check_invariants = true;
    auto W = ring_mixing(4, 0.5);
    bool pass = true;
    try {
        auto res = run_g_qprsgd(cfg, obj, W);
        pass = static_cast<int>(res.rounds.size()) == cfg.N && !res.diverged;
    } catch (const std::logic_error&) {
        pass = false;
    }
    report(11, pass, "500-round quantized gossip run, replica check exact every round");
}

void criterion_12() {
    auto W = ring_mixing(8, 0.5);
    Rng rng(121, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    double worst = -1e300;
    for (int trial = 0; trial < 100; ++trial) {
        Vector x = random_vec(8, rng);
        Vector mean = Vector::Constant(8, x.mean());
        double base = (x - mean).norm();
        Vector y = x;
        for (int t = 1; t <= 20; ++t) {
            y = W.W * y;
            worst = std::max(worst, (y - mean).norm() - std::pow(W.rho, t) * base);
        }
    }
    report(12, worst <= 1e-10, "max decay-bound violation %.2e <= 1e-10", worst);
}

void criterion_13() {
    double v1 = c1(4, 1, 2);
    bool p1 = std::abs(v1 - 0.8591409) < 1e-6;

    auto W = ring_mixing(4, 0.5);
    bool p2 = std::abs(W.rho - 0.5) < 1e-10 && std::abs(W.mu - 1.0) < 1e-10;

    TheoryParams p;
    p.d = 16;
    p.s = 16;
    p.M = 4;
    p.K = 4;
    p.N = 100;
    p.L = 1.0;
    p.sigma2 = 1.0;
    p.kappa2 = 0.0;
    p.rho = W.rho;
    p.mu = W.mu;
    double gamma = recommend_stepsize_gossip(p).gamma;
    const double frozen = 0.0030707485346138375;  // frozen reference value
    bool p3 = std::abs(gamma - frozen) < 1e-12;

    report(13, p1 && p2 && p3,
           "c1 %.9f, rho %.12f, mu %.12f, corollary-4 gamma %.17g vs frozen %.17g", v1, W.rho,
           W.mu, gamma, frozen);
}

}  // namespace

int main() {
    criteria_1_2();
    criteria_3_4();
    criterion_5();
    criterion_6();
    criteria_7_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    criterion_13();
    if (failures == 0)
        std::printf("all 13 acceptance criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
