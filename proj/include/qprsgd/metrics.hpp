// Metrics persistence and cross-arm summaries. CSV for time series, JSON
// (nlohmann) for reports; formatting is fixed so identical runs produce
// byte-identical files.
#pragma once

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qprsgd/algorithms.hpp"

namespace qprsgd {

inline constexpr const char* kMetricsHeader = "round,loss,grad_norm_sq,consensus,cum_bits,sim_seconds";

inline void write_metrics(const std::vector<RoundMetrics>& rows, std::ostream& out) {
    out << kMetricsHeader << '\n';
    out << std::setprecision(17);
    for (const auto& r : rows)
        out << r.round << ',' << r.loss << ',' << r.grad_norm_sq << ',' << r.consensus << ','
            << r.cum_bits << ',' << r.sim_seconds << '\n';
}

inline void write_metrics_file(const std::vector<RoundMetrics>& rows, const std::string& path) {
    // write to a temp name, then rename: readers never see a partial file
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw std::runtime_error("write_metrics_file: cannot open " + tmp);
        write_metrics(rows, f);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("write_metrics_file: rename failed for " + path);
}

inline std::vector<RoundMetrics> read_metrics(std::istream& in) {
    std::vector<RoundMetrics> rows;
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw std::runtime_error("read_metrics: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        RoundMetrics r;
        char c;
        ls >> r.round >> c >> r.loss >> c >> r.grad_norm_sq >> c >> r.consensus >> c >>
            r.cum_bits >> c >> r.sim_seconds;
        if (!ls) throw std::runtime_error("read_metrics: malformed row: " + line);
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<RoundMetrics> read_metrics_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_metrics_file: cannot open " + path);
    return read_metrics(f);
}

enum class ThresholdMetric { loss, grad_norm_sq };

struct Crossing {
    bool crossed = false;
    double rounds = 0.0;   // interpolated crossing round
    double bits = 0.0;     // interpolated cumulative bits at crossing
    double seconds = 0.0;  // interpolated simulated time at crossing
};

// First round at which the metric dips below the threshold, with linear
// interpolation between the bracketing rounds.
inline Crossing find_crossing(const std::vector<RoundMetrics>& rows, ThresholdMetric metric,
                              double threshold) {
    auto value = [&](const RoundMetrics& r) {
        return metric == ThresholdMetric::loss ? r.loss : r.grad_norm_sq;
    };
    Crossing c;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (value(rows[i]) <= threshold) {
            c.crossed = true;
            if (i == 0) {
                c.rounds = rows[0].round;
                c.bits = static_cast<double>(rows[0].cum_bits);
                c.seconds = rows[0].sim_seconds;
            } else {
                double v0 = value(rows[i - 1]), v1 = value(rows[i]);
                double t = v0 == v1 ? 1.0 : (v0 - threshold) / (v0 - v1);
                c.rounds = rows[i - 1].round + t * (rows[i].round - rows[i - 1].round);
                c.bits = static_cast<double>(rows[i - 1].cum_bits) +
                         t * (static_cast<double>(rows[i].cum_bits) -
                              static_cast<double>(rows[i - 1].cum_bits));
                c.seconds = rows[i - 1].sim_seconds +
                            t * (rows[i].sim_seconds - rows[i - 1].sim_seconds);
            }
            return c;
        }
    }
    return c;
}

// Per-arm threshold crossings plus arm/baseline reduction ratios, as JSON.
inline nlohmann::json summarize(const std::vector<std::string>& arm_names,
                                const std::vector<std::vector<RoundMetrics>>& arms,
                                ThresholdMetric metric, double threshold,
                                const std::string& baseline_name) {
    nlohmann::json out;
    out["threshold"] = threshold;
    out["metric"] = metric == ThresholdMetric::loss ? "loss" : "grad_norm_sq";
    std::optional<Crossing> baseline;
    for (std::size_t i = 0; i < arms.size(); ++i)
        if (arm_names[i] == baseline_name) baseline = find_crossing(arms[i], metric, threshold);

    for (std::size_t i = 0; i < arms.size(); ++i) {
        const auto c = find_crossing(arms[i], metric, threshold);
        nlohmann::json a;
        if (c.crossed) {
            a["rounds_to_threshold"] = c.rounds;
            a["bits_to_threshold"] = c.bits;
            a["time_to_threshold"] = c.seconds;
        } else {
            a["rounds_to_threshold"] = nullptr;
            a["bits_to_threshold"] = nullptr;
            a["time_to_threshold"] = nullptr;
            a["round_budget"] = arms[i].empty() ? 0 : arms[i].back().round;
        }
        a["final_loss"] = arms[i].empty() ? 0.0 : arms[i].back().loss;
        a["final_cum_bits"] = arms[i].empty() ? 0u : arms[i].back().cum_bits;
        if (baseline && baseline->crossed && c.crossed) {
            a["rounds_ratio_vs_baseline"] = c.rounds / baseline->rounds;
            a["bits_ratio_vs_baseline"] = c.bits / baseline->bits;
            a["time_ratio_vs_baseline"] = c.seconds / baseline->seconds;
        }
        // equal-round-count bits ratio is always well defined
        if (!arms[i].empty()) {
            for (std::size_t b = 0; b < arms.size(); ++b)
                if (arm_names[b] == baseline_name && !arms[b].empty())
                    a["bits_ratio_at_equal_rounds"] =
                        static_cast<double>(arms[i].back().cum_bits) /
                        static_cast<double>(arms[b].back().cum_bits);
        }
        out["arms"][arm_names[i]] = a;
    }
    out["baseline"] = baseline_name;
    return out;
}

// Trace dump: round,hop,sender,receiver,segment,bits
inline void write_trace_csv(const CollectiveTrace& trace, int round, std::ostream& out) {
    out << "round,hop,sender,receiver,segment,bits\n";
    for (std::size_t i = 0; i < trace.hops.size(); ++i) {
        const auto& h = trace.hops[i];
        out << round << ',' << i << ',' << h.sender << ',' << h.receiver << ',' << h.segment
            << ',' << h.bits << '\n';
    }
}

}  // namespace qprsgd
