#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgcn/matrix.hpp"

namespace fgcn {

// ============================================================================
// Graph representation
// ============================================================================

/// Undirected, unweighted simple graph in CSR adjacency form. Neighbor
/// lists are strictly ascending and never contain the node itself:
/// self-loops are dropped at construction and reintroduced analytically by
/// the operators that need them (the renormalized propagation below).
struct Graph {
    int num_nodes = 0;
    std::vector<int> row_offsets;  // num_nodes + 1
    std::vector<int> col_indices;

    int degree(int i) const { return row_offsets[i + 1] - row_offsets[i]; }

    /// Ascending neighbor ids of node i.
    std::pair<const int*, const int*> neighbors(int i) const {
        return {col_indices.data() + row_offsets[i], col_indices.data() + row_offsets[i + 1]};
    }
};

/// Builds a Graph from an edge list over nodes [0, n). Edges are
/// symmetrized, duplicates collapse, self-loops are dropped. Out-of-range
/// endpoints name the offending list position (line, for file input).
inline Graph build_graph(const std::vector<std::pair<int, int>>& edges, int n) {
    if (n < 0) throw std::invalid_argument("build_graph: negative node count");
    std::vector<std::vector<int>> adj(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        if (a < 0 || a >= n || b < 0 || b >= n) {
            std::ostringstream os;
            os << "edge " << (e + 1) << ": node index (" << a << "," << b
               << ") out of range [0," << n << ")";
            throw std::invalid_argument(os.str());
        }
        if (a == b) continue;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    Graph g;
    g.num_nodes = n;
    g.row_offsets.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        auto& nb = adj[i];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        g.row_offsets[i + 1] = g.row_offsets[i] + static_cast<int>(nb.size());
        g.col_indices.insert(g.col_indices.end(), nb.begin(), nb.end());
    }
    return g;
}

inline std::vector<double> degree_vector(const Graph& g) {
    std::vector<double> d(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) d[i] = g.degree(i);
    return d;
}

// ============================================================================
// Propagation operators
// ============================================================================

/// Renormalized propagation (D+I)^(-1/2) (A+I) (D+I)^(-1/2). The diagonal
/// is stored explicitly, so every row of the CSR has at least one entry.
/// Entry (i,j) for an edge is 1/sqrt((d_i+1)(d_j+1)); entry (i,i) is
/// 1/(d_i+1). Isolated nodes get the single entry 1.
inline SparseMatrix renormalized_propagation(const Graph& g) {
    const int n = g.num_nodes;
    std::vector<double> inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(g.degree(i) + 1.0);
    SparseMatrix s;
    s.rows = s.cols = n;
    s.row_offsets.assign(n + 1, 0);
    s.col_indices.reserve(g.col_indices.size() + n);
    s.values.reserve(g.col_indices.size() + n);
    for (int i = 0; i < n; ++i) {
        const double diag = 1.0 / (g.degree(i) + 1.0);
        auto [b, e] = g.neighbors(i);
        bool diag_done = false;
        for (const int* p = b; p != e; ++p) {
            if (!diag_done && *p > i) {
                s.col_indices.push_back(i);
                s.values.push_back(diag);
                diag_done = true;
            }
            s.col_indices.push_back(*p);
            s.values.push_back(inv_sqrt[i] * inv_sqrt[*p]);
        }
        if (!diag_done) {
            s.col_indices.push_back(i);
            s.values.push_back(diag);
        }
        s.row_offsets[i + 1] = static_cast<int>(s.col_indices.size());
    }
    return s;
}

/// Node-term diagonal of the renormalized propagation: alpha_i = 1/(d_i+1).
inline std::vector<double> renormalized_node_scale(const Graph& g) {
    std::vector<double> a(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) a[i] = 1.0 / (g.degree(i) + 1.0);
    return a;
}

/// Neighbor term of the renormalized propagation: the off-diagonal part
/// (D+I)^(-1/2) A (D+I)^(-1/2). Together with renormalized_node_scale this
/// is the node/neighbor split of renormalized_propagation.
inline SparseMatrix renormalized_neighbor(const Graph& g) {
    const int n = g.num_nodes;
    std::vector<double> inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(g.degree(i) + 1.0);
    SparseMatrix s;
    s.rows = s.cols = n;
    s.row_offsets.assign(n + 1, 0);
    s.col_indices.reserve(g.col_indices.size());
    s.values.reserve(g.col_indices.size());
    for (int i = 0; i < n; ++i) {
        auto [b, e] = g.neighbors(i);
        for (const int* p = b; p != e; ++p) {
            s.col_indices.push_back(*p);
            s.values.push_back(inv_sqrt[i] * inv_sqrt[*p]);
        }
        s.row_offsets[i + 1] = static_cast<int>(s.col_indices.size());
    }
    return s;
}

/// Symmetric normalized Laplacian I - D^(-1/2) A D^(-1/2). Rows of
/// isolated nodes reduce to the diagonal 1 (d^(-1/2) taken as 0).
inline SparseMatrix normalized_laplacian(const Graph& g) {
    const int n = g.num_nodes;
    std::vector<double> inv_sqrt(n);
    for (int i = 0; i < n; ++i) {
        const int d = g.degree(i);
        inv_sqrt[i] = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
    }
    SparseMatrix s;
    s.rows = s.cols = n;
    s.row_offsets.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        auto [b, e] = g.neighbors(i);
        bool diag_done = false;
        for (const int* p = b; p != e; ++p) {
            if (!diag_done && *p > i) {
                s.col_indices.push_back(i);
                s.values.push_back(1.0);
                diag_done = true;
            }
            s.col_indices.push_back(*p);
            s.values.push_back(-inv_sqrt[i] * inv_sqrt[*p]);
        }
        if (!diag_done) {
            s.col_indices.push_back(i);
            s.values.push_back(1.0);
        }
        s.row_offsets[i + 1] = static_cast<int>(s.col_indices.size());
    }
    return s;
}

/// Row-stochastic mean aggregator D^(-1) A. Isolated nodes yield an empty
/// row (an all-zero aggregate), not a division by zero.
inline SparseMatrix mean_propagation(const Graph& g) {
    const int n = g.num_nodes;
    SparseMatrix s;
    s.rows = s.cols = n;
    s.row_offsets.assign(n + 1, 0);
    s.col_indices.reserve(g.col_indices.size());
    s.values.reserve(g.col_indices.size());
    for (int i = 0; i < n; ++i) {
        const int d = g.degree(i);
        auto [b, e] = g.neighbors(i);
        for (const int* p = b; p != e; ++p) {
            s.col_indices.push_back(*p);
            s.values.push_back(1.0 / d);
        }
        s.row_offsets[i + 1] = static_cast<int>(s.col_indices.size());
    }
    return s;
}

// ============================================================================
// Edge-list file I/O
// ============================================================================

/// Reads a UTF-8 edge list: one "src<TAB>dst" pair per line, 0-based ids,
/// blank lines and lines starting with '#' ignored. Malformed lines and
/// (when n >= 0) out-of-range endpoints are reported with their 1-based
/// line number.
inline std::vector<std::pair<int, int>> read_edge_list(const std::string& path, int n = -1) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open edge list: " + path);
    std::vector<std::pair<int, int>> edges;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long long a, b;
        char tab;
        if (!(ls >> a) || !(ls.get(tab)) || tab != '\t' || !(ls >> b)) {
            std::ostringstream os;
            os << path << ":" << lineno << ": expected 'src<TAB>dst', got \"" << line << "\"";
            throw std::invalid_argument(os.str());
        }
        std::string rest;
        if (ls >> rest) {
            std::ostringstream os;
            os << path << ":" << lineno << ": trailing content \"" << rest << "\"";
            throw std::invalid_argument(os.str());
        }
        if (a < 0 || b < 0 || (n >= 0 && (a >= n || b >= n))) {
            std::ostringstream os;
            os << path << ":" << lineno << ": node index (" << a << "," << b << ") out of range";
            if (n >= 0) os << " [0," << n << ")";
            throw std::invalid_argument(os.str());
        }
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    return edges;
}

inline void write_edge_list(const std::string& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write edge list: " + path);
    for (int i = 0; i < g.num_nodes; ++i) {
        auto [b, e] = g.neighbors(i);
        for (const int* p = b; p != e; ++p)
            if (*p > i) out << i << '\t' << *p << '\n';
    }
    if (!out) throw std::runtime_error("short write: " + path);
}

} // namespace fgcn
