#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace fgcn {

// ============================================================================
// Dense storage
// ============================================================================

/// Row-major dense matrix of 64-bit reals. All shapes in this library are
/// desk-scale, so the representation favours simplicity and deterministic
/// traversal order over blocking tricks.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("DenseMatrix: negative shape");
    }

    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    bool same_shape(const DenseMatrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

inline void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

inline bool all_finite(const DenseMatrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

/// C = A * B. Fixed i-k-j accumulation order.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.cols == b.rows, "matmul inner dimension");
    DenseMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<std::size_t>(i) * b.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

/// C = A * B^T.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.cols == b.cols, "matmul_nt inner dimension");
    DenseMatrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = &b.data[static_cast<std::size_t>(j) * b.cols];
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

/// C = A^T * B.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.rows == b.rows, "matmul_tn inner dimension");
    DenseMatrix out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = &a.data[static_cast<std::size_t>(k) * a.cols];
        const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
        for (int i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.same_shape(b), "add");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

/// y += s * x.
inline void axpy(DenseMatrix& y, double s, const DenseMatrix& x) {
    check_shape(y.same_shape(x), "axpy");
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += s * x.data[i];
}

inline DenseMatrix scale(const DenseMatrix& a, double s) {
    DenseMatrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

inline double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.same_shape(b), "frobenius_dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

inline double frobenius_norm(const DenseMatrix& a) {
    return std::sqrt(frobenius_dot(a, a));
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    check_shape(a.same_shape(b), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline DenseMatrix dense_identity(int n) {
    DenseMatrix out(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

/// L1-normalizes each row in place; all-zero rows are left untouched.
inline void row_normalize(DenseMatrix& m) {
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += std::abs(m(i, j));
        if (s == 0.0) continue;
        for (int j = 0; j < m.cols; ++j) m(i, j) /= s;
    }
}

// ============================================================================
// Sparse storage (CSR)
// ============================================================================

/// Compressed sparse row matrix. Column indices are strictly ascending
/// within each row, which also fixes the accumulation order of spmm.
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_offsets;  // rows + 1 entries
    std::vector<int> col_indices;  // nnz entries
    std::vector<double> values;    // nnz entries

    int nnz() const { return static_cast<int>(col_indices.size()); }

    /// Builds CSR from (row, col, value) triplets; duplicate coordinates
    /// are summed. Throws on out-of-range indices or non-finite values.
    static SparseMatrix from_triplets(int rows, int cols,
                                      std::vector<std::tuple<int, int, double>> t) {
        for (const auto& [r, c, v] : t) {
            if (r < 0 || r >= rows || c < 0 || c >= cols) {
                std::ostringstream os;
                os << "sparse triplet (" << r << "," << c << ") out of range "
                   << rows << "x" << cols;
                throw std::invalid_argument(os.str());
            }
            if (!std::isfinite(v)) throw std::invalid_argument("sparse triplet: non-finite value");
        }
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a)) <
                   std::tie(std::get<0>(b), std::get<1>(b));
        });
        SparseMatrix s;
        s.rows = rows;
        s.cols = cols;
        s.row_offsets.assign(rows + 1, 0);
        for (std::size_t i = 0; i < t.size();) {
            std::size_t j = i;
            double acc = 0.0;
            while (j < t.size() && std::get<0>(t[j]) == std::get<0>(t[i]) &&
                   std::get<1>(t[j]) == std::get<1>(t[i])) {
                acc += std::get<2>(t[j]);
                ++j;
            }
            s.col_indices.push_back(std::get<1>(t[i]));
            s.values.push_back(acc);
            ++s.row_offsets[std::get<0>(t[i]) + 1];
            i = j;
        }
        for (int r = 0; r < rows; ++r) s.row_offsets[r + 1] += s.row_offsets[r];
        return s;
    }
};

inline SparseMatrix sparse_identity(int n, double value = 1.0) {
    SparseMatrix s;
    s.rows = s.cols = n;
    s.row_offsets.resize(n + 1);
    s.col_indices.resize(n);
    s.values.assign(n, value);
    for (int i = 0; i <= n; ++i) s.row_offsets[i] = i;
    for (int i = 0; i < n; ++i) s.col_indices[i] = i;
    return s;
}

inline SparseMatrix transpose(const SparseMatrix& s) {
    SparseMatrix t;
    t.rows = s.cols;
    t.cols = s.rows;
    t.row_offsets.assign(t.rows + 1, 0);
    t.col_indices.resize(s.col_indices.size());
    t.values.resize(s.values.size());
    for (int c : s.col_indices) ++t.row_offsets[c + 1];
    for (int r = 0; r < t.rows; ++r) t.row_offsets[r + 1] += t.row_offsets[r];
    std::vector<int> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (int i = 0; i < s.rows; ++i) {
        for (int k = s.row_offsets[i]; k < s.row_offsets[i + 1]; ++k) {
            const int pos = cursor[s.col_indices[k]]++;
            t.col_indices[pos] = i;  // ascending because rows are scanned in order
            t.values[pos] = s.values[k];
        }
    }
    return t;
}

/// C = S * D, dense output. Deterministic: each output row accumulates its
/// row's nonzeros in ascending column order.
inline DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
    check_shape(s.cols == d.rows, "spmm inner dimension");
    DenseMatrix out(s.rows, d.cols);
    for (int i = 0; i < s.rows; ++i) {
        double* orow = &out.data[static_cast<std::size_t>(i) * d.cols];
        for (int k = s.row_offsets[i]; k < s.row_offsets[i + 1]; ++k) {
            const double v = s.values[k];
            const double* drow = &d.data[static_cast<std::size_t>(s.col_indices[k]) * d.cols];
            for (int j = 0; j < d.cols; ++j) orow[j] += v * drow[j];
        }
    }
    return out;
}

inline DenseMatrix to_dense(const SparseMatrix& s) {
    DenseMatrix out(s.rows, s.cols);
    for (int i = 0; i < s.rows; ++i)
        for (int k = s.row_offsets[i]; k < s.row_offsets[i + 1]; ++k)
            out(i, s.col_indices[k]) += s.values[k];
    return out;
}

} // namespace fgcn
