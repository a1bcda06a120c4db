#pragma once

// Pseudo-undirected graphs: every undirected edge {i,j} is realized as two
// oppositely directed edges e_ij, e_ji with independent (possibly unequal,
// possibly negative) weights. The Laplacian always has 1 in its right null
// space but is not symmetric in general.

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace salvo {

class GraphError : public std::runtime_error {
public:
    explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

class SelfLoopError : public GraphError {
public:
    explicit SelfLoopError(const std::string& msg) : GraphError(msg) {}
};

class DuplicateEdgeError : public GraphError {
public:
    explicit DuplicateEdgeError(const std::string& msg) : GraphError(msg) {}
};

class HalfZeroWeightPairError : public GraphError {
public:
    explicit HalfZeroWeightPairError(const std::string& msg) : GraphError(msg) {}
};

class DisconnectedError : public GraphError {
public:
    explicit DisconnectedError(const std::string& msg) : GraphError(msg) {}
};

// One undirected edge {i,j} with its two directed weights. Vertices are
// 1-based (as in scenario files); stored canonically with i < j.
struct EdgePair {
    int i = 0;
    int j = 0;
    double w_ij = 0.0;  // weight of directed edge e_ij (i -> j)
    double w_ji = 0.0;  // weight of directed edge e_ji (j -> i)
};

class PseudoUndirectedGraph {
public:
    // Validates: n >= 2, non-empty edge list, no self-loops, no duplicate
    // pairs, the zero rule (a pair with exactly one zero weight is rejected;
    // both-zero is allowed), and skeleton connectivity.
    PseudoUndirectedGraph(int n, std::vector<EdgePair> edges) : n_(n) {
        if (n < 2) throw GraphError("vertex count must be at least 2");
        if (edges.empty()) throw GraphError("edge list must be non-empty");
        for (EdgePair& e : edges) {
            if (e.i < 1 || e.i > n || e.j < 1 || e.j > n)
                throw GraphError("edge (" + std::to_string(e.i) + "," +
                                 std::to_string(e.j) + ") out of range 1.." +
                                 std::to_string(n));
            if (e.i == e.j)
                throw SelfLoopError("self-loop at vertex " + std::to_string(e.i));
            if (e.i > e.j) {
                std::swap(e.i, e.j);
                std::swap(e.w_ij, e.w_ji);
            }
            const bool zi = e.w_ij == 0.0, zj = e.w_ji == 0.0;
            if (zi != zj)
                throw HalfZeroWeightPairError(
                    "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                    ") has exactly one zero weight; a directed weight may be "
                    "zero only together with its reverse");
        }
        std::sort(edges.begin(), edges.end(),
                  [](const EdgePair& a, const EdgePair& b) {
                      return std::make_pair(a.i, a.j) < std::make_pair(b.i, b.j);
                  });
        for (std::size_t k = 1; k < edges.size(); ++k)
            if (edges[k].i == edges[k - 1].i && edges[k].j == edges[k - 1].j)
                throw DuplicateEdgeError("duplicate edge (" +
                                         std::to_string(edges[k].i) + "," +
                                         std::to_string(edges[k].j) + ")");
        edges_ = std::move(edges);
        if (!connected())
            throw DisconnectedError("graph skeleton is not connected");
    }

    int n() const { return n_; }
    const std::vector<EdgePair>& edges() const { return edges_; }
    int directed_edge_count() const { return 2 * static_cast<int>(edges_.size()); }

    bool has_pair(int i, int j) const {
        if (i > j) std::swap(i, j);
        return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(i, j),
                                  [](const auto& a, const auto& b) {
                                      return key(a) < key(b);
                                  });
    }

    // Weight of directed edge e_ij; 0 when the pair {i,j} is absent.
    double weight(int i, int j) const {
        const EdgePair* e = find(i, j);
        if (!e) return 0.0;
        return (i < j) ? e->w_ij : e->w_ji;
    }

    // Adjacency matrix a_ij = w_ij (0-based rows; vertex v is row v-1).
    Eigen::MatrixXd adjacency() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
        for (const EdgePair& e : edges_) {
            a(e.i - 1, e.j - 1) = e.w_ij;
            a(e.j - 1, e.i - 1) = e.w_ji;
        }
        return a;
    }

    // Weighted Laplacian: L_ij = -w_ij off the diagonal, L_ii = sum of
    // outgoing weights. The diagonal is assembled as the exact negation of the
    // sequentially-summed off-diagonal row entries, so a row sum taken in the
    // same order (off-diagonals ascending, diagonal last) is exactly zero.
    Eigen::MatrixXd laplacian() const {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_, n_);
        for (const EdgePair& e : edges_) {
            L(e.i - 1, e.j - 1) = -e.w_ij;
            L(e.j - 1, e.i - 1) = -e.w_ji;
        }
        for (int r = 0; r < n_; ++r) {
            double s = 0.0;
            for (int c = 0; c < n_; ++c)
                if (c != r) s += L(r, c);
            L(r, r) = -s;
        }
        return L;
    }

    // Unweighted skeleton as sorted neighbor lists (1-based).
    std::vector<std::vector<int>> skeleton() const {
        std::vector<std::vector<int>> adj(n_ + 1);
        for (const EdgePair& e : edges_) {
            adj[e.i].push_back(e.j);
            adj[e.j].push_back(e.i);
        }
        for (auto& v : adj) std::sort(v.begin(), v.end());
        return adj;
    }

    // Skeleton diameter via per-vertex breadth-first scans.
    int diameter() const {
        const auto adj = skeleton();
        int diam = 0;
        for (int s = 1; s <= n_; ++s) {
            std::vector<int> dist(n_ + 1, -1);
            std::vector<int> q{s};
            dist[s] = 0;
            for (std::size_t h = 0; h < q.size(); ++h)
                for (int u : adj[q[h]])
                    if (dist[u] < 0) {
                        dist[u] = dist[q[h]] + 1;
                        q.push_back(u);
                    }
            diam = std::max(diam, *std::max_element(dist.begin() + 1, dist.end()));
        }
        return diam;
    }

private:
    static std::pair<int, int> key(const EdgePair& e) { return {e.i, e.j}; }
    static std::pair<int, int> key(const std::pair<int, int>& p) { return p; }

    const EdgePair* find(int i, int j) const {
        if (i > j) std::swap(i, j);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(i, j),
                                   [](const EdgePair& a, const std::pair<int, int>& b) {
                                       return key(a) < b;
                                   });
        if (it == edges_.end() || it->i != i || it->j != j) return nullptr;
        return &*it;
    }

    bool connected() const {
        const auto adj = skeleton();
        std::vector<char> seen(n_ + 1, 0);
        std::vector<int> q{1};
        seen[1] = 1;
        int cnt = 1;
        for (std::size_t h = 0; h < q.size(); ++h)
            for (int u : adj[q[h]])
                if (!seen[u]) {
                    seen[u] = 1;
                    ++cnt;
                    q.push_back(u);
                }
        return cnt == n_;
    }

    int n_;
    std::vector<EdgePair> edges_;
};

// Incidence decomposition E = E_tau * R with R = [I | -I | T_tau | -T_tau].
//
// Column ordering of the 2m directed edges: spanning-subgraph edges
// (parent,child) in depth-first discovery order from vertex 1 (ascending
// neighbor tie-break), then their reversals, then the remaining forward chords
// e_ij (i < j) lexicographically, then the chord reversals. A column for
// directed edge e_ij carries +1 at row i and -1 at row j; E_out keeps the +1;
// the matching W diagonal entry is w_ij.
struct IncidenceDecomposition {
    Eigen::MatrixXd E;      // n x 2m signed incidence
    Eigen::MatrixXd E_out;  // n x 2m out-incidence (the +1 entries)
    Eigen::MatrixXd E_tau;  // n x (n-1) spanning-subgraph incidence
    Eigen::MatrixXd T_tau;  // (n-1) x (m-n+1) completion
    Eigen::MatrixXd R;      // (n-1) x 2m block matrix [I | -I | T | -T]
    Eigen::MatrixXd W;      // 2m x 2m diagonal weight matrix
    std::vector<std::pair<int, int>> columns;  // directed (from,to), 1-based

    // Column index of directed edge e_ij; -1 when absent.
    int edge_index(int i, int j) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k].first == i && columns[k].second == j)
                return static_cast<int>(k);
        return -1;
    }
};

inline IncidenceDecomposition incidence_decomposition(const PseudoUndirectedGraph& g) {
    const int n = g.n();
    const auto adj = g.skeleton();

    // Depth-first spanning subgraph from vertex 1, ascending neighbors.
    std::vector<char> seen(n + 1, 0);
    std::vector<std::pair<int, int>> tree;  // (parent, child) discovery order
    std::vector<std::pair<int, std::size_t>> stack{{1, 0}};
    seen[1] = 1;
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        bool advanced = false;
        while (next < adj[v].size()) {
            const int u = adj[v][next++];
            if (!seen[u]) {
                seen[u] = 1;
                tree.emplace_back(v, u);
                stack.emplace_back(u, 0);
                advanced = true;
                break;
            }
        }
        if (!advanced) stack.pop_back();
    }

    std::vector<std::pair<int, int>> chords;  // (i,j) i<j lexicographic
    {
        std::vector<std::pair<int, int>> tset;
        for (auto [a, b] : tree) tset.emplace_back(std::min(a, b), std::max(a, b));
        std::sort(tset.begin(), tset.end());
        for (const EdgePair& e : g.edges())
            if (!std::binary_search(tset.begin(), tset.end(), std::make_pair(e.i, e.j)))
                chords.emplace_back(e.i, e.j);
        std::sort(chords.begin(), chords.end());
    }

    IncidenceDecomposition d;
    for (auto [a, b] : tree) d.columns.emplace_back(a, b);
    for (auto [a, b] : tree) d.columns.emplace_back(b, a);
    for (auto [a, b] : chords) d.columns.emplace_back(a, b);
    for (auto [a, b] : chords) d.columns.emplace_back(b, a);

    const int m2 = static_cast<int>(d.columns.size());
    const int nt = static_cast<int>(tree.size());    // = n-1
    const int nc = static_cast<int>(chords.size());  // = m-n+1

    d.E = Eigen::MatrixXd::Zero(n, m2);
    d.E_out = Eigen::MatrixXd::Zero(n, m2);
    Eigen::VectorXd w(m2);
    for (int k = 0; k < m2; ++k) {
        const auto [a, b] = d.columns[k];
        d.E(a - 1, k) = 1.0;
        d.E(b - 1, k) = -1.0;
        d.E_out(a - 1, k) = 1.0;
        w(k) = g.weight(a, b);
    }
    d.W = w.asDiagonal();

    d.E_tau = d.E.leftCols(nt);
    const Eigen::MatrixXd E_ch = d.E.middleCols(2 * nt, nc);
    d.T_tau = (nc > 0)
                  ? Eigen::MatrixXd((d.E_tau.transpose() * d.E_tau)
                                        .ldlt()
                                        .solve(d.E_tau.transpose() * E_ch))
                  : Eigen::MatrixXd(nt, 0);

    d.R.resize(nt, m2);
    d.R << Eigen::MatrixXd::Identity(nt, nt), -Eigen::MatrixXd::Identity(nt, nt),
        d.T_tau, -d.T_tau;
    return d;
}

}  // namespace salvo
