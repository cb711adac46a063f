// Mixing-matrix construction and spectral analysis for the gossip paradigm.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qprsgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric doubly stochastic weight matrix with cached spectral quantities.
//   rho = max(|lambda_2|, |lambda_M|), the consensus contraction factor;
//   mu  = max_{i >= 2} |lambda_i - 1|.
struct MixingMatrix {
    Matrix W;
    double rho = 0.0;
    double mu = 0.0;
    Eigen::VectorXd eigenvalues;  // sorted descending

    int size() const { return static_cast<int>(W.rows()); }
};

struct SpectralQuantities {
    double rho;
    double mu;
    Eigen::VectorXd eigenvalues;  // sorted descending
};

inline SpectralQuantities spectral_quantities(const Matrix& W) {
    if (W.rows() != W.cols()) throw std::invalid_argument("spectral_quantities: not square");
    if (!W.isApprox(W.transpose(), 1e-12))
        throw std::invalid_argument("spectral_quantities: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(W);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_quantities: eigensolver failed");
    Eigen::VectorXd ev = es.eigenvalues();  // ascending
    SpectralQuantities q;
    q.eigenvalues = ev.reverse();
    const int M = static_cast<int>(ev.size());
    if (M == 1) {
        q.rho = 0.0;
        q.mu = 0.0;
        return q;
    }
    // eigenvalues sorted descending: [0] is lambda_1 ~ 1.
    q.rho = std::max(std::abs(q.eigenvalues[1]), std::abs(q.eigenvalues[M - 1]));
    q.mu = 0.0;
    for (int i = 1; i < M; ++i) q.mu = std::max(q.mu, std::abs(q.eigenvalues[i] - 1.0));
    return q;
}

inline MixingMatrix finalize_mixing(Matrix W) {
    MixingMatrix m;
    auto q = spectral_quantities(W);
    m.W = std::move(W);
    m.rho = q.rho;
    m.mu = q.mu;
    m.eigenvalues = std::move(q.eigenvalues);
    return m;
}

// Circulant ring: each worker mixes with its two neighbours.
// Eigenvalues are self_weight + (1 - self_weight) * cos(2*pi*k/M).
inline MixingMatrix ring_mixing(int M, double self_weight) {
    if (M < 3) throw std::invalid_argument("ring_mixing: M must be >= 3");
    if (!(self_weight > 0.0 && self_weight < 1.0))
        throw std::invalid_argument("ring_mixing: self_weight must be in (0,1)");
    const double nw = (1.0 - self_weight) / 2.0;
    Matrix W = Matrix::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        W(i, i) = self_weight;
        W(i, (i + 1) % M) = nw;
        W(i, (i + M - 1) % M) = nw;
    }
    return finalize_mixing(std::move(W));
}

// W = (1/M) * ones: one-shot averaging, rho = 0.
inline MixingMatrix complete_mixing(int M) {
    if (M < 1) throw std::invalid_argument("complete_mixing: M must be >= 1");
    return finalize_mixing(Matrix::Constant(M, M, 1.0 / M));
}

using AdjacencyList = std::vector<std::vector<int>>;

inline bool is_connected(const AdjacencyList& adj) {
    const int M = static_cast<int>(adj.size());
    if (M == 0) return false;
    std::vector<bool> seen(M, false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
    }
    return count == M;
}

// Metropolis-Hastings weights: W_ij = 1/(1 + max(deg_i, deg_j)) on edges,
// diagonal absorbs the remainder.
inline MixingMatrix metropolis_mixing(const AdjacencyList& adj) {
    const int M = static_cast<int>(adj.size());
    if (!is_connected(adj))
        throw std::invalid_argument("metropolis_mixing: graph must be connected");
    Matrix W = Matrix::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        for (int j : adj[i]) {
            if (j == i) continue;
            double deg = std::max(adj[i].size(), adj[j].size());
            W(i, j) = 1.0 / (1.0 + deg);
        }
        W(i, i) = 1.0 - W.row(i).sum();
    }
    return finalize_mixing(std::move(W));
}

// Text format: one undirected edge "i j" per line, 0-indexed.
inline AdjacencyList load_adjacency(std::istream& in, int M = -1) {
    std::vector<std::pair<int, int>> edges;
    int max_node = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int a, b;
        if (!(ls >> a >> b)) throw std::invalid_argument("load_adjacency: bad edge line: " + line);
        if (a < 0 || b < 0) throw std::invalid_argument("load_adjacency: negative node id");
        edges.emplace_back(a, b);
        max_node = std::max({max_node, a, b});
    }
    int n = M > 0 ? M : max_node + 1;
    if (max_node >= n) throw std::invalid_argument("load_adjacency: node id exceeds M");
    AdjacencyList adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        if (a != b) adj[b].push_back(a);
    }
    return adj;
}

inline AdjacencyList load_adjacency_file(const std::string& path, int M = -1) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("load_adjacency_file: cannot open " + path);
    return load_adjacency(f, M);
}

// Margin for the gossip compression-noise hypothesis d*mu^2 < s^2*(1-rho)^2.
struct GossipFeasibility {
    double margin;   // d*mu^2 - s^2*(1-rho)^2; feasible when negative
    bool feasible;
};

inline GossipFeasibility check_gossip_feasible(const MixingMatrix& W, Eigen::Index d,
                                               std::uint32_t s) {
    double margin = static_cast<double>(d) * W.mu * W.mu -
                    static_cast<double>(s) * s * (1.0 - W.rho) * (1.0 - W.rho);
    return {margin, margin < 0.0};
}

}  // namespace qprsgd
