// Closed-form constants and stepsize constraints of the convergence theory,
// computed as plain deterministic functions. Exponentials go through log
// space where d/(4 s^2) can be large.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprsgd {

struct TheoryParams {
    Eigen::Index d = 1;
    std::uint32_t s = 1;
    int M = 1;
    int K = 1;
    int N = 1;
    double L = 1.0;
    double sigma2 = 0.0;
    double kappa2 = 0.0;
    double rho = 0.0;    // from MixingMatrix (gossip only)
    double mu = 0.0;     // from MixingMatrix (gossip only)
    double gamma = 0.0;  // candidate stepsize
};

// Recursive-compression constant
//   C1 = (1/M) exp(d/4s^2) + (4s^2/d) (d/(4s^2 M) + 1)^(M-1) - (4s^2/d + 1).
inline double c1(Eigen::Index d, std::uint32_t s, int M) {
    if (d < 1 || s < 1 || M < 1) throw std::invalid_argument("c1: d, s, M must be >= 1");
    const double x = static_cast<double>(d) / (4.0 * s * s);
    if (x > 700.0) throw std::overflow_error("c1: exp(d/4s^2) overflows double range");
    const double term1 = std::exp(x - std::log(static_cast<double>(M)));
    const double term2 = std::exp(std::log(1.0 / x) + (M - 1) * std::log1p(x / M));
    return term1 + term2 - (1.0 / x + 1.0);
}

// Worker-count bound: d (1 + d/4s^2) / (exp(d/4s^2) - d/4s^2 - 1).
inline double worker_bound(Eigen::Index d, std::uint32_t s) {
    const double x = static_cast<double>(d) / (4.0 * s * s);
    if (x > 60.0)  // exp(x) dominates; evaluate in log space
        return std::exp(std::log(static_cast<double>(d) * (1.0 + x)) - x);
    const double denom = std::expm1(x) - x;  // exp(x) - x - 1, exact for small x
    if (denom <= 0.0) throw std::runtime_error("worker_bound: nonpositive denominator");
    return static_cast<double>(d) * (1.0 + x) / denom;
}

struct GossipConstants {
    double D1p, D2p, D3p, D4p, D5p, D6p;
};

inline GossipConstants gossip_constants(const TheoryParams& p) {
    const double d = static_cast<double>(p.d);
    const double s = static_cast<double>(p.s);
    const double K = static_cast<double>(p.K);
    const double g = p.gamma;
    const double L = p.L;

    const double feas = s * s * (1.0 - p.rho) * (1.0 - p.rho) - d * p.mu * p.mu;
    if (feas <= 0.0)
        throw std::runtime_error("gossip_constants: infeasible, d*mu^2 >= s^2*(1-rho)^2");

    const double denom1 = 1.0 - 12.0 * g * g * L * L * (K + 1.0) * (K - 2.0);
    if (denom1 <= 0.0)
        throw std::runtime_error("gossip_constants: 1 - 12*g^2*L^2*(K+1)*(K-2) <= 0");

    GossipConstants c;
    c.D1p = (2.0 * K + 24.0 * g * g * L * L - 1.0) / denom1;
    c.D2p = (d * (1.0 - p.rho) * (1.0 - p.rho) + 2.0 * d * p.mu * p.mu) / (2.0 * feas);
    c.D3p = c.D2p / (1.0 - p.rho * p.rho) + 1.0 / ((1.0 - p.rho) * (1.0 - p.rho));
    c.D4p = 2.0 * g * L * K * c.D3p + g * L * (K - 1.0) / 2.0 + c.D2p / (2.0 * p.M);

    const double denom5 = 1.0 - 8.0 * L * L * g * g * K * c.D1p * c.D3p;
    if (denom5 <= 0.0)
        throw std::runtime_error("gossip_constants: 1 - 8*L^2*g^2*K*D1'*D3' <= 0");
    c.D5p = 2.0 * K * L * g * c.D4p / denom5;
    c.D6p = 1.0 - 4.0 * K * (K - 1.0) * L * L * g * g * c.D5p - 2.0 * g * K * L;
    return c;
}

// Feasibility report for the three stepsize inequalities of the RAR theory.
struct Theorem1Report {
    bool pass1 = false;  // exists delta in (0,1)
    bool pass2 = false;  // exists epsilon in (0,1)
    bool pass3 = false;
    double delta = 0.0;    // largest feasible delta, floored at 0
    double epsilon = 0.0;  // largest feasible epsilon, floored at 0
    bool all_pass() const { return pass1 && pass2 && pass3; }
};

inline Theorem1Report validate_theorem1(const TheoryParams& p, double C1) {
    const double K = static_cast<double>(p.K);
    const double g = p.gamma;
    const double L = p.L;
    Theorem1Report r;

    const double lhs1 = 2.0 * (K + 1.0) * (K - 2.0) * L * L * g * g;
    r.delta = std::max(0.0, 1.0 - lhs1);
    r.pass1 = lhs1 < 1.0;  // some delta in (0,1) exists

    const double denom = 1.0 - lhs1;
    if (denom > 0.0) {
        const double lhs2 =
            (8.0 * C1 * L * L * g * g + (K - 1.0) * L * g + 2.0 * C1) * K * L * g / denom;
        r.epsilon = std::max(0.0, 1.0 - 2.0 * lhs2);
        r.pass2 = 2.0 * lhs2 < 1.0;

        const double lhs3 = 1.0 - L * g -
                            (4.0 * K * L * g * C1 + 1.0) * (K - 1.0) * K * L * L * g * g / denom;
        r.pass3 = lhs3 > 0.0;
    }
    return r;
}

enum class ArStepsizeVariant { c1, c2, c3 };

struct StepsizeRecommendation {
    double gamma = 0.0;
    std::vector<std::string> warnings;  // violated preconditions, value still usable
};

// Corollary stepsizes for the RAR algorithm:
//   c1: 1/(L K sqrt(N));  c2: 1/(L sqrt(N K));  c3: sqrt(M)/(L sqrt(N K)).
inline StepsizeRecommendation recommend_stepsize_ar(ArStepsizeVariant variant,
                                                    const TheoryParams& p) {
    StepsizeRecommendation rec;
    const double N = static_cast<double>(p.N);
    const double K = static_cast<double>(p.K);
    switch (variant) {
        case ArStepsizeVariant::c1:
            rec.gamma = 1.0 / (p.L * K * std::sqrt(N));
            break;
        case ArStepsizeVariant::c2:
            rec.gamma = 1.0 / (p.L * std::sqrt(N * K));
            if (p.kappa2 > 0.0 && K > p.sigma2 / (2.0 * p.kappa2))
                rec.warnings.push_back("K exceeds sigma^2/(2 kappa^2)");
            break;
        case ArStepsizeVariant::c3: {
            rec.gamma = std::sqrt(static_cast<double>(p.M)) / (p.L * std::sqrt(N * K));
            const double wb = worker_bound(p.d, p.s);
            if (p.M > wb) rec.warnings.push_back("M exceeds the worker bound");
            if (p.kappa2 > 0.0) {
                const double x = static_cast<double>(p.d) / (4.0 * p.s * p.s);
                const double kb = p.sigma2 / (2.0 * p.kappa2) * (1.0 + 2.0 * std::exp(-x));
                if (K > kb) rec.warnings.push_back("K exceeds the corollary-3 bound");
            }
            break;
        }
    }
    return rec;
}

struct GossipStepsizeReport {
    double gamma = 0.0;
    double n_lower_bound = 0.0;  // validity range: N >= this
    double k_upper_bound = 0.0;  // validity range: K <= this (0 if unknown)
    std::vector<std::string> warnings;
};

// Corollary stepsize for the gossip algorithm:
//   gamma = (sigma sqrt(N/M) + 3 K L cbrt(D2') + 16 K L D3' + 6 K L)^(-1).
// D2', D3' depend only on (d, s, rho, mu), so no bootstrap circularity.
// f_gap = F(x_1) - F_* enters the K validity bound; pass 0 when unknown.
inline GossipStepsizeReport recommend_stepsize_gossip(const TheoryParams& p, double f_gap = 0.0) {
    if (p.sigma2 <= 0.0)
        throw std::invalid_argument(
            "recommend_stepsize_gossip: sigma^2 must be positive (use a small floor)");
    TheoryParams q = p;
    q.gamma = 0.0;  // D2', D3' are gamma-free
    const auto c = gossip_constants(q);
    const double sigma = std::sqrt(p.sigma2);
    const double K = static_cast<double>(p.K);
    const double N = static_cast<double>(p.N);
    const double Md = static_cast<double>(p.M);

    GossipStepsizeReport r;
    r.gamma = 1.0 / (sigma * std::sqrt(N / Md) + 3.0 * K * p.L * std::cbrt(c.D2p) +
                     16.0 * K * p.L * c.D3p + 6.0 * K * p.L);

    r.n_lower_bound = p.L * p.L * Md / p.sigma2 *
                      std::max(K * K * Md * Md * (4.0 * c.D3p + 1.0) * (4.0 * c.D3p + 1.0) /
                                   (c.D2p * c.D2p),
                               6.0 * (K - 1.0) * (2.0 * K - 1.0));
    if (N < r.n_lower_bound) r.warnings.push_back("N below the corollary validity range");
    if (f_gap > 0.0) {
        r.k_upper_bound =
            std::sqrt(f_gap * p.sigma2 / (p.L * c.D2p * (p.sigma2 + 4.0 * p.kappa2)));
        if (K > r.k_upper_bound) r.warnings.push_back("K above the corollary validity range");
    }
    return r;
}

}  // namespace qprsgd
