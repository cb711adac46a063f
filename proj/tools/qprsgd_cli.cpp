// Command-line front end: single runs, multi-arm comparisons, parameter
// sweeps, theory-constant reports, and Monte Carlo bound verifiers.
//
// Exit codes: 0 success, 1 config error, 2 verification failure, 3 divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qprsgd/algorithms.hpp"
#include "qprsgd/bounds.hpp"
#include "qprsgd/metrics.hpp"

using nlohmann::json;
using namespace qprsgd;

namespace {

struct CommonOpts {
    std::string algo = "ar-qprsgd";
    int workers = 4;
    int local_steps = 4;
    int rounds = 100;
    std::uint32_t quant_levels = 0;  // 0 = lossless
    std::string topology = "ring";
    double self_weight = 0.5;
    std::string objective = "quadratic";
    int dim = 16;
    int batch = 16;
    int samples = 256;
    double heterogeneity = 0.1;
    double separation = 3.0;
    double gamma = 0.0;
    std::string gamma_rule;
    double bandwidth_mbps = 100.0;
    double latency_ms = 0.0;
    double compute_ms = 1.0;
    std::uint64_t seed = 1;
    std::string out;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--algo", o.algo)
        ->check(CLI::IsMember({"psgd", "prsgd", "qsgd", "ar-qprsgd", "g-qprsgd"}));
    cmd->add_option("--workers", o.workers)->check(CLI::PositiveNumber);
    cmd->add_option("--local-steps", o.local_steps)->check(CLI::PositiveNumber);
    cmd->add_option("--rounds", o.rounds)->check(CLI::PositiveNumber);
    cmd->add_option("--quant-levels", o.quant_levels);
    cmd->add_option("--topology", o.topology);  // ring | complete | file:<path>
    cmd->add_option("--self-weight", o.self_weight);
    cmd->add_option("--objective", o.objective)->check(CLI::IsMember({"quadratic", "logreg"}));
    cmd->add_option("--dim", o.dim)->check(CLI::PositiveNumber);
    cmd->add_option("--batch", o.batch)->check(CLI::PositiveNumber);
    cmd->add_option("--samples", o.samples)->check(CLI::PositiveNumber);
    cmd->add_option("--heterogeneity", o.heterogeneity);
    cmd->add_option("--separation", o.separation);
    cmd->add_option("--gamma", o.gamma);
    cmd->add_option("--gamma-rule", o.gamma_rule)->check(CLI::IsMember({"c1", "c2", "c3", "gossip"}));
    cmd->add_option("--bandwidth-mbps", o.bandwidth_mbps);
    cmd->add_option("--latency-ms", o.latency_ms);
    cmd->add_option("--compute-ms", o.compute_ms);
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--out", o.out);
}

Algorithm parse_algo(const std::string& s) {
    if (s == "psgd") return Algorithm::psgd;
    if (s == "prsgd") return Algorithm::prsgd;
    if (s == "qsgd") return Algorithm::qsgd;
    if (s == "ar-qprsgd") return Algorithm::ar_qprsgd;
    return Algorithm::g_qprsgd;
}

ObjectiveSuite build_objective(const CommonOpts& o) {
    if (o.objective == "quadratic")
        return make_quadratic(o.workers, o.dim, o.heterogeneity, o.samples, o.seed);
    return make_logreg(o.workers, o.dim, o.samples, o.separation, o.seed);
}

MixingMatrix build_topology(const CommonOpts& o) {
    if (o.topology == "ring") return ring_mixing(o.workers, o.self_weight);
    if (o.topology == "complete") return complete_mixing(o.workers);
    if (o.topology.rfind("file:", 0) == 0)
        return metropolis_mixing(load_adjacency_file(o.topology.substr(5), o.workers));
    throw std::invalid_argument("unknown topology: " + o.topology);
}

double resolve_gamma(const CommonOpts& o, const ObjectiveSuite& obj, const MixingMatrix* W) {
    if (o.gamma > 0.0) return o.gamma;
    if (o.gamma_rule.empty())
        throw std::invalid_argument("need --gamma or --gamma-rule");
    auto prof = estimate_profile(obj, 10, o.seed);
    TheoryParams p;
    p.d = o.dim;
    p.s = std::max<std::uint32_t>(o.quant_levels, 1);
    p.M = o.workers;
    p.K = o.local_steps;
    p.N = o.rounds;
    p.L = std::max(prof.L, 1e-8);
    p.sigma2 = std::max(prof.sigma2, 1e-8);
    p.kappa2 = prof.kappa2;
    if (o.gamma_rule == "gossip") {
        if (W == nullptr) throw std::invalid_argument("gossip gamma rule needs a topology");
        p.rho = W->rho;
        p.mu = W->mu;
        auto rec = recommend_stepsize_gossip(p);
        for (const auto& w : rec.warnings) std::cerr << "warning: " << w << '\n';
        return rec.gamma;
    }
    ArStepsizeVariant v = o.gamma_rule == "c1"   ? ArStepsizeVariant::c1
                          : o.gamma_rule == "c2" ? ArStepsizeVariant::c2
                                                 : ArStepsizeVariant::c3;
    auto rec = recommend_stepsize_ar(v, p);
    for (const auto& w : rec.warnings) std::cerr << "warning: " << w << '\n';
    return rec.gamma;
}

RunResult execute(const CommonOpts& o, std::uint64_t seed) {
    auto obj = build_objective(o);
    Algorithm algo = parse_algo(o.algo);
    Paradigm paradigm = algo == Algorithm::g_qprsgd ? Paradigm::gossip : Paradigm::allreduce;
    MixingMatrix W;
    bool need_w = paradigm == Paradigm::gossip;
    if (need_w) {
        W = build_topology(o);
        auto feas = check_gossip_feasible(W, o.dim, std::max<std::uint32_t>(o.quant_levels, 1));
        if (!feas.feasible && o.quant_levels != kLossless)
            std::cerr << "warning: gossip compression-noise hypothesis violated (margin "
                      << feas.margin << "); theory bound void, run proceeds\n";
    }

    RunConfig cfg;
    cfg.M = o.workers;
    cfg.K = o.local_steps;
    cfg.N = o.rounds;
    cfg.s = o.quant_levels;
    cfg.batch = o.batch;
    cfg.seed = seed;
    cfg.link.bandwidth_bps = o.bandwidth_mbps * 1e6;
    cfg.link.latency_s = o.latency_ms * 1e-3;
    cfg.link.compute_s_per_local_step = o.compute_ms * 1e-3;
    cfg.gamma = resolve_gamma(o, obj, need_w ? &W : nullptr);

    switch (algo) {
        case Algorithm::ar_qprsgd:
            return run_ar_qprsgd(cfg, obj);
        case Algorithm::g_qprsgd:
            return run_g_qprsgd(cfg, obj, W);
        default:
            return run_baseline(algo, Paradigm::allreduce, cfg, obj);
    }
}

int cmd_run(const CommonOpts& o) {
    auto res = execute(o, o.seed);
    if (!o.out.empty())
        write_metrics_file(res.rounds, o.out);
    else
        write_metrics(res.rounds, std::cout);
    return res.diverged ? 3 : 0;
}

int cmd_compare(const CommonOpts& base, const std::vector<std::string>& algos,
                double threshold, const std::string& metric_name, const std::string& baseline) {
    std::vector<std::string> names;
    std::vector<std::vector<RoundMetrics>> arms;
    for (std::size_t i = 0; i < algos.size(); ++i) {
        CommonOpts o = base;
        o.algo = algos[i];
        // arm streams derive from the base seed by arm index; adding an arm
        // never perturbs existing arms
        auto res = execute(o, Rng(base.seed, {0xA7Du, i}).next_u64());
        names.push_back(algos[i]);
        arms.push_back(res.rounds);
        if (!base.out.empty())
            write_metrics_file(res.rounds, base.out + "." + algos[i] + ".csv");
    }
    ThresholdMetric metric =
        metric_name == "loss" ? ThresholdMetric::loss : ThresholdMetric::grad_norm_sq;
    json summary = summarize(names, arms, metric, threshold, baseline);
    if (!base.out.empty()) {
        std::ofstream f(base.out + ".summary.json");
        f << summary.dump(2) << '\n';
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_bounds(const CommonOpts& o) {
    auto obj = build_objective(o);
    auto prof = estimate_profile(obj, 10, o.seed);
    std::uint32_t s = std::max<std::uint32_t>(o.quant_levels, 1);
    json rep;
    rep["d"] = o.dim;
    rep["s"] = s;
    rep["M"] = o.workers;
    rep["K"] = o.local_steps;
    rep["N"] = o.rounds;
    rep["L"] = prof.L;
    rep["sigma2"] = prof.sigma2;
    rep["kappa2"] = prof.kappa2;
    rep["c1"] = c1(o.dim, s, o.workers);
    rep["worker_bound"] = worker_bound(o.dim, s);

    TheoryParams p;
    p.d = o.dim;
    p.s = s;
    p.M = o.workers;
    p.K = o.local_steps;
    p.N = o.rounds;
    p.L = std::max(prof.L, 1e-8);
    p.sigma2 = std::max(prof.sigma2, 1e-8);
    p.kappa2 = prof.kappa2;
    p.gamma = o.gamma > 0 ? o.gamma : recommend_stepsize_ar(ArStepsizeVariant::c3, p).gamma;
    rep["gamma"] = p.gamma;

    auto t1 = validate_theorem1(p, c1(o.dim, s, o.workers));
    rep["theorem1"] = {{"pass1", t1.pass1}, {"pass2", t1.pass2}, {"pass3", t1.pass3},
                       {"delta", t1.delta}, {"epsilon", t1.epsilon}};

    try {
        auto W = build_topology(o);
        p.rho = W.rho;
        p.mu = W.mu;
        rep["topology"] = {{"rho", W.rho}, {"mu", W.mu}};
        auto feas = check_gossip_feasible(W, o.dim, s);
        rep["gossip_feasible"] = feas.feasible;
        rep["gossip_margin"] = feas.margin;
        if (feas.feasible) {
            auto gc = gossip_constants(p);
            rep["gossip_constants"] = {{"D1p", gc.D1p}, {"D2p", gc.D2p}, {"D3p", gc.D3p},
                                       {"D4p", gc.D4p}, {"D5p", gc.D5p}, {"D6p", gc.D6p}};
            auto rec = recommend_stepsize_gossip(p);
            rep["gossip_gamma"] = rec.gamma;
        }
    } catch (const std::exception& e) {
        rep["topology_error"] = e.what();
    }

    if (!o.out.empty()) {
        std::ofstream f(o.out);
        f << rep.dump(2) << '\n';
    }
    std::cout << rep.dump(2) << '\n';
    return 0;
}

// ---- verifiers -----------------------------------------------------------

json verify_unbiased(int dim, std::uint32_t s, int trials, std::uint64_t seed, bool& pass) {
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gen.gaussian();
    Vector mean = Vector::Zero(dim), m2 = Vector::Zero(dim);
    for (int t = 0; t < trials; ++t) {
        Rng rng(seed, {static_cast<std::uint64_t>(StreamPurpose::quantize),
                       static_cast<std::uint64_t>(t)});
        Vector q = dequantize(quantize(v, s, rng));
        mean += q;
        m2 += q.cwiseProduct(q);
    }
    mean /= trials;
    double max_z = 0.0;
    for (int i = 0; i < dim; ++i) {
        double var = m2[i] / trials - mean[i] * mean[i];
        double se = std::sqrt(std::max(var, 1e-300) / trials);
        if (se > 0.0) max_z = std::max(max_z, std::abs(mean[i] - v[i]) / se);
    }
    pass = max_z < 4.0;
    return {{"check", "unbiased"}, {"dim", dim}, {"s", s}, {"trials", trials},
            {"max_z_score", max_z}, {"pass", pass}};
}

json verify_second_moment(int dim, std::uint32_t s, int trials, std::uint64_t seed, bool& pass) {
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gen.gaussian();
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(seed, {static_cast<std::uint64_t>(StreamPurpose::quantize),
                       static_cast<std::uint64_t>(t)});
        acc += (dequantize(quantize(v, s, rng)) - v).squaredNorm();
    }
    double emp = acc / trials;
    double bound = dim / (4.0 * s * s) * v.squaredNorm();
    pass = emp <= bound * 1.01;
    return {{"check", "second-moment"}, {"empirical", emp}, {"bound", bound}, {"pass", pass}};
}

json verify_sparsity(int dim, std::uint32_t s, int trials, std::uint64_t seed, bool& pass) {
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = gen.gaussian();
        v /= v.norm();
        Rng rng(seed, {static_cast<std::uint64_t>(StreamPurpose::quantize),
                       static_cast<std::uint64_t>(t)});
        auto b = quantize(v, s, rng);
        for (auto lvl : b.levels) acc += lvl != 0 ? 1.0 : 0.0;
    }
    double emp = acc / trials;
    double bound = sparsity_bound(dim, s);
    pass = emp <= bound * 1.02;
    return {{"check", "sparsity"}, {"empirical_l0", emp}, {"bound", bound}, {"pass", pass}};
}

json verify_codelen(int dim, std::uint32_t s, int trials, std::uint64_t seed, bool& pass) {
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    double acc = 0.0;
    bool roundtrip_ok = true;
    for (int t = 0; t < trials; ++t) {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = gen.gaussian();
        Rng rng(seed, {static_cast<std::uint64_t>(StreamPurpose::quantize),
                       static_cast<std::uint64_t>(t)});
        auto b = quantize(v, s, rng);
        auto bits = encode_block(b);
        acc += static_cast<double>(bits.size());
        auto back = decode_block(bits, dim, s);
        if (back.levels != b.levels || back.signs != b.signs ||
            static_cast<float>(back.norm) != static_cast<float>(b.norm))
            roundtrip_ok = false;
    }
    double emp = acc / trials;
    double bound = expected_code_length_bound(dim, s);
    pass = emp <= bound && roundtrip_ok;
    return {{"check", "codelen"}, {"empirical_bits", emp}, {"bound", bound},
            {"roundtrip_exact", roundtrip_ok}, {"pass", pass}};
}

json verify_mixing_decay(int M, double self_weight, int trials, std::uint64_t seed, bool& pass) {
    auto W = ring_mixing(M, self_weight);
    Rng gen(seed, {static_cast<std::uint64_t>(StreamPurpose::data_gen)});
    double worst = -1e300;
    pass = true;
    for (int t = 0; t < trials; ++t) {
        Vector x(M);
        for (int i = 0; i < M; ++i) x[i] = gen.gaussian();
        Vector mean_vec = Vector::Constant(M, x.mean());
        double base = (x - mean_vec).norm();
        Vector y = x;
        for (int step = 1; step <= 20; ++step) {
            y = W.W * y;
            double lhs = (y - mean_vec).norm();
            double rhs = std::pow(W.rho, step) * base;
            worst = std::max(worst, lhs - rhs);
            if (lhs > rhs + 1e-10) pass = false;
        }
    }
    return {{"check", "mixing-decay"}, {"M", M}, {"rho", W.rho}, {"worst_violation", worst},
            {"pass", pass}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized parallel restarted SGD simulator"};
    app.require_subcommand(1);

    CommonOpts run_o, cmp_o, bounds_o, sweep_o;
    auto* run_cmd = app.add_subcommand("run", "execute a single configuration");
    add_common_flags(run_cmd, run_o);

    auto* cmp_cmd = app.add_subcommand("compare", "run multiple arms with a shared seed base");
    add_common_flags(cmp_cmd, cmp_o);
    std::vector<std::string> cmp_algos = {"psgd", "prsgd", "qsgd", "ar-qprsgd"};
    double cmp_threshold = 0.1;
    std::string cmp_metric = "loss", cmp_baseline = "prsgd";
    cmp_cmd->add_option("--algos", cmp_algos)->delimiter(',');
    cmp_cmd->add_option("--threshold", cmp_threshold);
    cmp_cmd->add_option("--threshold-metric", cmp_metric)
        ->check(CLI::IsMember({"loss", "grad_norm_sq"}));
    cmp_cmd->add_option("--baseline", cmp_baseline);

    auto* bounds_cmd = app.add_subcommand("bounds", "print the theory-constants report");
    add_common_flags(bounds_cmd, bounds_o);

    auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo bound checks");
    std::string check;
    int v_dim = 32, v_trials = 100000, v_M = 8;
    std::uint32_t v_s = 4;
    double v_self_weight = 0.5;
    std::uint64_t v_seed = 1;
    std::string v_out;
    verify_cmd->add_option("check", check, "unbiased|second-moment|sparsity|codelen|lemma1|mixing-decay")
        ->required()
        ->check(CLI::IsMember({"unbiased", "second-moment", "sparsity", "codelen", "lemma1",
                               "mixing-decay"}));
    verify_cmd->add_option("--dim", v_dim);
    verify_cmd->add_option("--quant-levels", v_s);
    verify_cmd->add_option("--trials", v_trials);
    verify_cmd->add_option("--workers", v_M);
    verify_cmd->add_option("--self-weight", v_self_weight);
    verify_cmd->add_option("--seed", v_seed);
    verify_cmd->add_option("--out", v_out);

    auto* sweep_cmd = app.add_subcommand("sweep", "grid over K, M, s, bandwidth");
    add_common_flags(sweep_cmd, sweep_o);
    std::vector<int> grid_k, grid_m;
    std::vector<std::uint32_t> grid_s;
    std::vector<double> grid_bw;
    sweep_cmd->add_option("--grid-k", grid_k)->delimiter(',');
    sweep_cmd->add_option("--grid-m", grid_m)->delimiter(',');
    sweep_cmd->add_option("--grid-s", grid_s)->delimiter(',');
    sweep_cmd->add_option("--grid-bandwidth", grid_bw)->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // normalize CLI11 exit codes: config error is 1
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_o);
        if (cmp_cmd->parsed())
            return cmd_compare(cmp_o, cmp_algos, cmp_threshold, cmp_metric, cmp_baseline);
        if (bounds_cmd->parsed()) return cmd_bounds(bounds_o);

        if (verify_cmd->parsed()) {
            bool pass = false;
            json rep;
            if (check == "unbiased")
                rep = verify_unbiased(v_dim, v_s, v_trials, v_seed, pass);
            else if (check == "second-moment")
                rep = verify_second_moment(v_dim, v_s, v_trials, v_seed, pass);
            else if (check == "sparsity")
                rep = verify_sparsity(v_dim, v_s, v_trials, v_seed, pass);
            else if (check == "codelen")
                rep = verify_codelen(v_dim, v_s, v_trials, v_seed, pass);
            else if (check == "lemma1") {
                auto r = verify_lemma1(v_dim, v_s, v_M, v_trials, v_seed);
                pass = r.pass;
                rep = {{"check", "lemma1"}, {"empirical", r.empirical_second_moment},
                       {"bound", r.bound}, {"margin", r.margin}, {"std_error", r.std_error},
                       {"pass", r.pass}};
            } else {
                rep = verify_mixing_decay(v_M, v_self_weight, std::min(v_trials, 1000), v_seed,
                                          pass);
            }
            if (!v_out.empty()) {
                std::ofstream f(v_out);
                f << rep.dump(2) << '\n';
            }
            std::cout << rep.dump(2) << '\n';
            return pass ? 0 : 2;
        }

        if (sweep_cmd->parsed()) {
            if (grid_k.empty()) grid_k = {sweep_o.local_steps};
            if (grid_m.empty()) grid_m = {sweep_o.workers};
            if (grid_s.empty()) grid_s = {sweep_o.quant_levels};
            if (grid_bw.empty()) grid_bw = {sweep_o.bandwidth_mbps};
            json cells = json::array();
            for (int K : grid_k)
                for (int M : grid_m)
                    for (std::uint32_t s : grid_s)
                        for (double bw : grid_bw) {
                            CommonOpts o = sweep_o;
                            o.local_steps = K;
                            o.workers = M;
                            o.quant_levels = s;
                            o.bandwidth_mbps = bw;
                            auto res = execute(o, o.seed);
                            std::ostringstream tag;
                            tag << "K" << K << "_M" << M << "_s" << s << "_bw" << bw;
                            if (!o.out.empty())
                                write_metrics_file(res.rounds, o.out + "." + tag.str() + ".csv");
                            cells.push_back({{"cell", tag.str()},
                                             {"final_loss", res.rounds.back().loss},
                                             {"final_grad_norm_sq", res.rounds.back().grad_norm_sq},
                                             {"cum_bits", res.rounds.back().cum_bits},
                                             {"sim_seconds", res.rounds.back().sim_seconds},
                                             {"diverged", res.diverged}});
                        }
            json out = {{"cells", cells}};
            if (!sweep_o.out.empty()) {
                std::ofstream f(sweep_o.out + ".summary.json");
                f << out.dump(2) << '\n';
            }
            std::cout << out.dump(2) << '\n';
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
