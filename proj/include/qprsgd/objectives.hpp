// Desk-scale objective suites: per-worker empirical-risk shards with exact
// full gradients and a seeded minibatch oracle. Two families: least-squares
// quadratics (closed-form optimum, exact L) and regularized logistic
// regression on synthetic Gaussian blobs.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprsgd/rng.hpp"

namespace qprsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ObjectiveKind { quadratic, logreg };

struct Sample {
    Vector a;  // features
    double b;  // quadratic: target; logreg: label in {-1, +1}
};

struct SmoothnessProfile {
    double L = 0.0;
    double sigma2 = 0.0;
    double kappa2 = 0.0;
};

class ObjectiveSuite {
  public:
    ObjectiveKind kind = ObjectiveKind::quadratic;
    int M = 1;
    Eigen::Index d = 1;
    double l2_reg = 0.0;  // logreg only
    std::vector<std::vector<Sample>> shards;

    double sample_loss(const Sample& smp, const Vector& x) const {
        if (kind == ObjectiveKind::quadratic) {
            double r = smp.a.dot(x) - smp.b;
            return 0.5 * r * r;
        }
        double z = -smp.b * smp.a.dot(x);
        // log(1 + exp(z)) without overflow
        double ce = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        return ce + 0.5 * l2_reg * x.squaredNorm();
    }

    Vector sample_grad(const Sample& smp, const Vector& x) const {
        if (kind == ObjectiveKind::quadratic) return smp.a * (smp.a.dot(x) - smp.b);
        double z = -smp.b * smp.a.dot(x);
        double sig = 1.0 / (1.0 + std::exp(-z));  // sigmoid(z)
        return (-smp.b * sig) * smp.a + l2_reg * x;
    }

    double worker_loss(int m, const Vector& x) const {
        double acc = 0.0;
        for (const auto& smp : shards[m]) acc += sample_loss(smp, x);
        return acc / static_cast<double>(shards[m].size());
    }

    // Exact full gradient of F_m (empirical-risk construction).
    Vector worker_grad(int m, const Vector& x) const {
        Vector g = Vector::Zero(d);
        for (const auto& smp : shards[m]) g += sample_grad(smp, x);
        return g / static_cast<double>(shards[m].size());
    }

    double global_loss(const Vector& x) const {
        double acc = 0.0;
        for (int m = 0; m < M; ++m) acc += worker_loss(m, x);
        return acc / M;
    }

    Vector global_grad(const Vector& x) const {
        Vector g = Vector::Zero(d);
        for (int m = 0; m < M; ++m) g += worker_grad(m, x);
        return g / M;
    }

    // Minibatch with replacement; batch >= shard size falls back to the exact
    // full gradient (deterministic oracle).
    Vector stochastic_grad(int m, const Vector& x, int batch, Rng& rng) const {
        const auto& shard = shards[m];
        if (batch >= static_cast<int>(shard.size())) return worker_grad(m, x);
        Vector g = Vector::Zero(d);
        for (int i = 0; i < batch; ++i)
            g += sample_grad(shard[rng.below(shard.size())], x);
        return g / static_cast<double>(batch);
    }

    // Global Hessian of the quadratic family: mean of a a^T over all shards.
    Matrix quadratic_hessian() const {
        if (kind != ObjectiveKind::quadratic)
            throw std::logic_error("quadratic_hessian: not a quadratic suite");
        Matrix H = Matrix::Zero(d, d);
        for (const auto& shard : shards) {
            double w = 1.0 / (static_cast<double>(M) * shard.size());
            for (const auto& smp : shard) H += w * smp.a * smp.a.transpose();
        }
        return H;
    }

    // Closed-form least-squares minimizer of the global quadratic.
    Vector quadratic_minimizer() const {
        if (kind != ObjectiveKind::quadratic)
            throw std::logic_error("quadratic_minimizer: not a quadratic suite");
        Matrix H = Matrix::Zero(d, d);
        Vector c = Vector::Zero(d);
        for (const auto& shard : shards) {
            double w = 1.0 / (static_cast<double>(M) * shard.size());
            for (const auto& smp : shard) {
                H += w * smp.a * smp.a.transpose();
                c += w * smp.b * smp.a;
            }
        }
        return H.ldlt().solve(c);
    }

    // F_*: closed form for quadratics, gradient descent otherwise.
    double optimum_value() const {
        if (kind == ObjectiveKind::quadratic) return global_loss(quadratic_minimizer());
        Vector x = Vector::Zero(d);
        double step = 1.0;
        for (int it = 0; it < 20000; ++it) {
            Vector g = global_grad(x);
            if (g.norm() < 1e-10) break;
            // backtracking on the global loss
            double f0 = global_loss(x);
            while (global_loss(x - step * g) > f0 - 0.25 * step * g.squaredNorm() && step > 1e-12)
                step *= 0.5;
            x -= step * g;
            step *= 1.5;
        }
        return global_loss(x);
    }
};

// Least-squares shards sharing one base sample set; worker targets carry a
// per-worker shift scaled by `heterogeneity`, so heterogeneity = 0 means
// bitwise-identical shards and kappa^2 = 0.
inline ObjectiveSuite make_quadratic(int M, Eigen::Index d, double heterogeneity,
                                     int n_samples, std::uint64_t seed) {
    if (M < 1 || d < 1 || n_samples < 1)
        throw std::invalid_argument("make_quadratic: M, d, n_samples must be >= 1");
    ObjectiveSuite suite;
    suite.kind = ObjectiveKind::quadratic;
    suite.M = M;
    suite.d = d;
    suite.shards.resize(M);

    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    Vector x_true(d);
    for (Eigen::Index i = 0; i < d; ++i) x_true[i] = gen.gaussian();

    std::vector<Sample> base(n_samples);
    const double feat_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < n_samples; ++i) {
        base[i].a = Vector(d);
        for (Eigen::Index j = 0; j < d; ++j) base[i].a[j] = gen.gaussian() * feat_scale;
        base[i].b = base[i].a.dot(x_true) + 0.5 * gen.gaussian();
    }

    for (int m = 0; m < M; ++m) {
        double shift = heterogeneity * gen.gaussian();
        suite.shards[m] = base;
        for (auto& smp : suite.shards[m]) smp.b += shift;
    }
    return suite;
}

// Binary logistic regression on two Gaussian blobs, l2-regularized, sharded
// across workers. `label_skew` in [0, 1) biases worker m's class balance.
inline ObjectiveSuite make_logreg(int M, Eigen::Index d, int n_per_worker,
                                  double class_separation, std::uint64_t seed,
                                  double label_skew = 0.0) {
    if (M < 1 || d < 1 || n_per_worker < 1)
        throw std::invalid_argument("make_logreg: M, d, n_per_worker must be >= 1");
    ObjectiveSuite suite;
    suite.kind = ObjectiveKind::logreg;
    suite.M = M;
    suite.d = d;
    suite.l2_reg = 1e-4;
    suite.shards.resize(M);

    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    Vector center(d);
    for (Eigen::Index i = 0; i < d; ++i) center[i] = gen.gaussian();
    center *= class_separation / (2.0 * center.norm());

    for (int m = 0; m < M; ++m) {
        double p_pos = 0.5 + label_skew * (m % 2 == 0 ? 0.5 : -0.5);
        suite.shards[m].resize(n_per_worker);
        for (int i = 0; i < n_per_worker; ++i) {
            double y = gen.uniform() < p_pos ? 1.0 : -1.0;
            Sample& smp = suite.shards[m][i];
            smp.b = y;
            smp.a = Vector(d);
            for (Eigen::Index j = 0; j < d; ++j) smp.a[j] = y * center[j] + gen.gaussian();
        }
    }
    return suite;
}

// Empirical estimates of the smoothness constants at random probe points.
// L is exact (Hessian spectral norm) for quadratics; sigma^2 and kappa^2 are
// maxima over probes, estimates rather than suprema.
inline SmoothnessProfile estimate_profile(const ObjectiveSuite& obj, int n_probes,
                                          std::uint64_t seed) {
    if (n_probes < 10) throw std::invalid_argument("estimate_profile: need >= 10 probes");
    Rng rng(seed, {static_cast<std::uint64_t>(StreamPurpose::probe)});
    std::vector<Vector> probes(n_probes);
    for (auto& x : probes) {
        x = Vector(obj.d);
        for (Eigen::Index i = 0; i < obj.d; ++i) x[i] = rng.gaussian();
    }

    SmoothnessProfile prof;
    if (obj.kind == ObjectiveKind::quadratic) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(obj.quadratic_hessian());
        prof.L = es.eigenvalues().cwiseAbs().maxCoeff();
    } else {
        for (int i = 0; i < n_probes; ++i)
            for (int j = i + 1; j < n_probes; ++j) {
                double dist = (probes[i] - probes[j]).norm();
                if (dist == 0.0) continue;  // degenerate pair
                double ratio = (obj.global_grad(probes[i]) - obj.global_grad(probes[j])).norm() / dist;
                prof.L = std::max(prof.L, ratio);
            }
    }

    for (const auto& x : probes) {
        Vector gF = obj.global_grad(x);
        double kap = 0.0;
        for (int m = 0; m < obj.M; ++m) {
            Vector gm = obj.worker_grad(m, x);
            kap += (gF - gm).squaredNorm();
            double var = 0.0;
            for (const auto& smp : obj.shards[m]) var += (obj.sample_grad(smp, x) - gm).squaredNorm();
            prof.sigma2 = std::max(prof.sigma2, var / static_cast<double>(obj.shards[m].size()));
        }
        prof.kappa2 = std::max(prof.kappa2, kap / obj.M);
    }
    return prof;
}

// One sample per row: worker, target/label, then the feature values.
inline void dump_csv(const ObjectiveSuite& obj, std::ostream& out) {
    out.precision(17);
    for (int m = 0; m < obj.M; ++m)
        for (const auto& smp : obj.shards[m]) {
            out << m << ',' << smp.b;
            for (Eigen::Index j = 0; j < obj.d; ++j) out << ',' << smp.a[j];
            out << '\n';
        }
}

inline ObjectiveSuite load_csv(std::istream& in, ObjectiveKind kind, double l2_reg = 1e-4) {
    ObjectiveSuite suite;
    suite.kind = kind;
    suite.l2_reg = kind == ObjectiveKind::logreg ? l2_reg : 0.0;
    std::string line;
    Eigen::Index d = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ls, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() < 3) throw std::invalid_argument("load_csv: malformed row");
        if (d < 0) d = static_cast<Eigen::Index>(vals.size()) - 2;
        if (static_cast<Eigen::Index>(vals.size()) - 2 != d)
            throw std::invalid_argument("load_csv: inconsistent dimension");
        int m = static_cast<int>(vals[0]);
        if (m >= static_cast<int>(suite.shards.size())) suite.shards.resize(m + 1);
        Sample smp;
        smp.b = vals[1];
        smp.a = Eigen::Map<Vector>(vals.data() + 2, d);
        suite.shards[m].push_back(std::move(smp));
    }
    suite.M = static_cast<int>(suite.shards.size());
    suite.d = d;
    return suite;
}

}  // namespace qprsgd
