#pragma once

// Shared helpers for the unit tests: deterministic random graphs and
// matrices, plus a dense comparator with an explicit tolerance.

#include <string>
#include <utility>
#include <vector>

#include "fgcn/fgcn.hpp"

namespace testutil {

/// Erdos-Renyi graph on n nodes, every i<j pair kept with probability p.
inline fgcn::Graph er_graph(int n, double p, std::uint64_t seed) {
    fgcn::Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    return fgcn::build_graph(edges, n);
}

/// Circulant graph on n nodes with the given offsets; |offsets| distinct
/// offsets in [1, n/2] give a regular graph.
inline fgcn::Graph circulant(int n, const std::vector<int>& offsets) {
    std::vector<std::pair<int, int>> edges;
    for (int o : offsets)
        for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + o) % n);
    return fgcn::build_graph(edges, n);
}

inline fgcn::DenseMatrix random_dense(int rows, int cols, std::uint64_t seed, double lo = -1.0,
                                      double hi = 1.0) {
    fgcn::Rng rng(seed);
    fgcn::DenseMatrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

inline double max_diff(const fgcn::DenseMatrix& a, const fgcn::DenseMatrix& b) {
    return fgcn::max_abs_diff(a, b);
}

inline bool bit_equal(const fgcn::DenseMatrix& a, const fgcn::DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

}  // namespace testutil
