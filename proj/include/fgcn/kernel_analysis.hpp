#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgcn/graph.hpp"
#include "fgcn/matrix.hpp"

// Symbolic and numeric analysis of recursive propagation kernels.
//
// The recursion h_k = act(P h_{k-1} W_k) with P = alpha*I + F unrolls, in
// the linear case, into a polynomial in F: each power F^k ("hop k") carries
// a multiset of weight monomials. The machinery below expands that
// polynomial for three weight-sharing schemes, enumerates the underlying
// binary computation tree, searches which hop subsets a scheme can realize
// by zeroing weights, and cross-checks the symbolic picture numerically by
// regressing a black-box linear model onto the basis {F^k X}.

namespace fgcn::kernel {

enum class Scheme { shared, shared_skip, non_shared };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::shared: return "shared";
        case Scheme::shared_skip: return "skip";
        case Scheme::non_shared: return "non_shared";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "shared") return Scheme::shared;
    if (s == "skip" || s == "shared_skip") return Scheme::shared_skip;
    if (s == "non_shared" || s == "nonshared") return Scheme::non_shared;
    throw std::invalid_argument("unknown scheme: " + s);
}

// ============================================================================
// Symbolic expansion
// ============================================================================

/// One weight symbol. variant -1 is a plain W_layer; variants 0/1 are the
/// per-hop-position weights W_layer^0 (identity path) and W_layer^1
/// (neighbor path) of the non-shared scheme.
struct Symbol {
    int layer = 0;
    int variant = -1;

    friend bool operator==(const Symbol& a, const Symbol& b) {
        return a.layer == b.layer && a.variant == b.variant;
    }
    friend bool operator<(const Symbol& a, const Symbol& b) {
        return a.layer != b.layer ? a.layer < b.layer : a.variant < b.variant;
    }
};

inline std::string to_string(const Symbol& s) {
    std::string out = "W" + std::to_string(s.layer);
    if (s.variant >= 0) out += "^" + std::to_string(s.variant);
    return out;
}

/// Product of weight symbols (ordered by layer) with an integer scalar
/// coefficient >= 1.
struct WeightMonomial {
    long long coeff = 1;
    std::vector<Symbol> symbols;
};

inline std::string to_string(const WeightMonomial& m) {
    std::ostringstream os;
    if (m.coeff != 1 || m.symbols.empty()) os << m.coeff;
    for (std::size_t i = 0; i < m.symbols.size(); ++i) {
        if (i > 0 || m.coeff != 1) os << "*";
        os << to_string(m.symbols[i]);
    }
    return os.str();
}

/// Map from hop index k (power of F) to the weight monomials reaching that
/// hop. For the shared scheme each hop additionally carries the factor
/// alpha^(K-k), recorded in alpha_power (zero elsewhere: the skip scheme is
/// expanded at alpha = 1, and the non-shared tree has no alpha).
struct HopPolynomial {
    int hops = 0;
    Scheme scheme = Scheme::shared;
    std::optional<double> alpha;  // empty = symbolic alpha
    std::map<int, std::vector<WeightMonomial>> terms;
    std::map<int, int> alpha_power;

    /// Sum of integer coefficients at hop k (0 when the hop is absent).
    long long coefficient_total(int k) const {
        auto it = terms.find(k);
        if (it == terms.end()) return 0;
        long long acc = 0;
        for (const auto& m : it->second) acc += m.coeff;
        return acc;
    }

    /// coefficient_total with the alpha factor applied (requires numeric
    /// alpha or a zero alpha power).
    double numeric_coefficient(int k) const {
        const int ap = alpha_power.count(k) ? alpha_power.at(k) : 0;
        if (ap == 0) return static_cast<double>(coefficient_total(k));
        if (!alpha) throw std::logic_error("numeric_coefficient: alpha is symbolic");
        double f = 1.0;
        for (int i = 0; i < ap; ++i) f *= *alpha;
        return f * static_cast<double>(coefficient_total(k));
    }
};

inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long acc = 1;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
}

/// Expansion of the shared-weight K-hop kernel (alpha*I + F)^K h0 W1..WK:
/// hop k carries the single monomial C(K,k) * W1..WK with alpha^(K-k).
/// Pass alpha as a number to evaluate coefficients, or nothing to keep it
/// symbolic.
inline HopPolynomial expand_shared(int hops, std::optional<double> alpha = std::nullopt) {
    if (hops < 1) throw std::invalid_argument("expand_shared: hops must be >= 1");
    if (hops > 62) throw std::invalid_argument("expand_shared: hops too large for exact integers");
    HopPolynomial p;
    p.hops = hops;
    p.scheme = Scheme::shared;
    p.alpha = alpha;
    std::vector<Symbol> all;
    for (int i = 1; i <= hops; ++i) all.push_back({i, -1});
    for (int k = 0; k <= hops; ++k) {
        p.terms[k] = {WeightMonomial{binomial(hops, k), all}};
        p.alpha_power[k] = hops - k;
    }
    return p;
}

/// Expansion of the skip recursion h_k = P h_{k-1} W_k + h_{k-1} (k >= 2,
/// no skip at the first layer), evaluated at alpha = 1. The recursion is
/// unrolled over powers of P first, then each P^j is expanded binomially
/// into hops 0..j. Only the linear-activation case is expanded; with a
/// nonlinearity the sum does not commute through the layers.
inline HopPolynomial expand_skip(int hops) {
    if (hops < 2) throw std::invalid_argument("expand_skip: hops must be >= 2");
    if (hops > 30) throw std::invalid_argument("expand_skip: hops too large");
    // State: P-power j and symbol sequence -> integer coefficient.
    std::map<std::pair<int, std::vector<Symbol>>, long long> state;
    state[{1, {Symbol{1, -1}}}] = 1;
    for (int k = 2; k <= hops; ++k) {
        std::map<std::pair<int, std::vector<Symbol>>, long long> next = state;  // skip path
        for (const auto& [key, c] : state) {
            auto [j, syms] = key;
            std::vector<Symbol> ext = syms;
            ext.push_back({k, -1});
            next[{j + 1, ext}] += c;
        }
        state = std::move(next);
    }
    HopPolynomial p;
    p.hops = hops;
    p.scheme = Scheme::shared_skip;
    p.alpha = 1.0;
    std::map<int, std::map<std::vector<Symbol>, long long>> merged;
    for (const auto& [key, c] : state) {
        const auto& [j, syms] = key;
        for (int i = 0; i <= j; ++i) merged[i][syms] += c * binomial(j, i);
    }
    for (auto& [hop, monos] : merged) {
        p.alpha_power[hop] = 0;
        for (auto& [syms, c] : monos) p.terms[hop].push_back(WeightMonomial{c, syms});
    }
    return p;
}

/// Expansion of the non-shared two-weight recursion
/// h_k = h_{k-1} W_k^0 + F h_{k-1} W_k^1: every identity/neighbor choice
/// string is its own monomial, so hop k holds C(K,k) distinct monomials of
/// coefficient 1.
inline HopPolynomial expand_non_shared(int hops) {
    if (hops < 1 || hops > 20)
        throw std::invalid_argument("expand_non_shared: hops must be in [1,20]");
    HopPolynomial p;
    p.hops = hops;
    p.scheme = Scheme::non_shared;
    for (std::uint32_t path = 0; path < (1u << hops); ++path) {
        int hop = 0;
        std::vector<Symbol> syms;
        syms.reserve(hops);
        for (int layer = 1; layer <= hops; ++layer) {
            const int bit = (path >> (layer - 1)) & 1u;
            hop += bit;
            syms.push_back({layer, bit});
        }
        p.terms[hop].push_back(WeightMonomial{1, syms});
    }
    for (int k = 0; k <= hops; ++k) p.alpha_power[k] = 0;
    return p;
}

// ============================================================================
// Computation-tree enumeration
// ============================================================================

struct PathRow {
    int hop = 0;             // number of F applications on the path
    int identity_count = 0;  // identity transforms on the path (= K - hop)
    int fa_count = 0;        // F transforms on the path (= hop)
    long long paths = 0;     // number of distinct paths reaching this hop
};

/// Per-hop rows of the K-level binary computation tree, ordered by
/// ascending fa_count.
struct PathTable {
    int hops = 0;
    std::vector<PathRow> rows;

    long long total_paths() const {
        long long acc = 0;
        for (const auto& r : rows) acc += r.paths;
        return acc;
    }
};

/// Walks all 2^K identity/neighbor choice strings of the K-hop computation
/// tree and tallies them by hop. Counts are measured from the enumeration,
/// not computed from a closed form.
inline PathTable enumerate_paths(int hops) {
    if (hops < 1 || hops > 20)
        throw std::invalid_argument("enumerate_paths: hops must be in [1,20]");
    PathTable t;
    t.hops = hops;
    t.rows.resize(hops + 1);
    for (int k = 0; k <= hops; ++k) t.rows[k] = PathRow{k, hops - k, k, 0};
    for (std::uint32_t path = 0; path < (1u << hops); ++path) {
        int fa = 0;
        for (int b = 0; b < hops; ++b) fa += (path >> b) & 1u;
        ++t.rows[fa].paths;
    }
    return t;
}

// ============================================================================
// Reachable hop subsets
// ============================================================================

/// Hop subsets encoded as bitmasks: bit k set means hop k contributes.
using HopSubset = std::uint32_t;

inline std::string subset_to_string(HopSubset s, int hops) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (int k = 0; k <= hops; ++k) {
        if (!(s >> k & 1u)) continue;
        if (!first) os << ",";
        os << k;
        first = false;
    }
    os << "}";
    return os.str();
}

/// Exhaustively searches all zero/nonzero assignments of a scheme's weight
/// symbols and returns every nonempty hop subset the scheme can produce.
/// A monomial survives an assignment iff all of its symbols are nonzero;
/// a hop is present iff some monomial at that hop survives (coefficients
/// are positive, so surviving terms cannot cancel).
inline std::set<HopSubset> reachable_hop_subsets(int hops, Scheme scheme) {
    if (hops < 1 || hops > 6)
        throw std::invalid_argument("reachable_hop_subsets: hops must be in [1,6]");
    HopPolynomial poly;
    switch (scheme) {
        case Scheme::shared: poly = expand_shared(hops, 1.0); break;
        case Scheme::shared_skip: poly = expand_skip(hops); break;
        case Scheme::non_shared: poly = expand_non_shared(hops); break;
    }
    std::vector<Symbol> symbols;
    {
        std::set<Symbol> seen;
        for (const auto& [hop, monos] : poly.terms)
            for (const auto& m : monos)
                for (const Symbol& s : m.symbols) seen.insert(s);
        symbols.assign(seen.begin(), seen.end());
    }
    const int ns = static_cast<int>(symbols.size());
    if (ns > 20) throw std::invalid_argument("reachable_hop_subsets: too many symbols");
    auto sym_pos = [&](const Symbol& s) {
        for (int i = 0; i < ns; ++i)
            if (symbols[i] == s) return i;
        throw std::logic_error("symbol not indexed");
    };
    std::set<HopSubset> out;
    for (std::uint32_t assign = 0; assign < (1u << ns); ++assign) {
        HopSubset reached = 0;
        for (const auto& [hop, monos] : poly.terms) {
            for (const auto& m : monos) {
                bool alive = true;
                for (const Symbol& s : m.symbols)
                    if (!(assign >> sym_pos(s) & 1u)) {
                        alive = false;
                        break;
                    }
                if (alive) {
                    reached |= 1u << hop;
                    break;
                }
            }
        }
        if (reached != 0) out.insert(reached);
    }
    return out;
}

// ============================================================================
// Numeric hop regression
// ============================================================================

struct SpanFit {
    std::vector<double> coeffs;  // one per basis element
    double residual = 0.0;       // ||fit - y||_F / max(1, ||y||_F)
    double condition = 0.0;      // condition number of the basis
    bool ok = false;             // false: basis rank-deficient, resample
};

namespace detail {

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. a is overwritten with the diagonalized matrix; v receives
/// the eigenvectors as columns.
inline void jacobi_eigen(DenseMatrix& a, DenseMatrix& v) {
    const int n = a.rows;
    v = dense_identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-300) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
}

} // namespace detail

/// Least squares of y onto the span of the given basis matrices (all the
/// same shape), solved through the eigendecomposition of the Gram matrix.
/// The fit is flagged not-ok when the basis condition number exceeds 1e8.
inline SpanFit least_squares_span(const std::vector<DenseMatrix>& basis, const DenseMatrix& y) {
    if (basis.empty()) throw std::invalid_argument("least_squares_span: empty basis");
    const int n = static_cast<int>(basis.size());
    for (const auto& b : basis) check_shape(b.same_shape(y), "least_squares_span basis shape");
    DenseMatrix gram(n, n);
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
        rhs[i] = frobenius_dot(basis[i], y);
        for (int j = i; j < n; ++j) gram(i, j) = gram(j, i) = frobenius_dot(basis[i], basis[j]);
    }
    DenseMatrix evecs;
    detail::jacobi_eigen(gram, evecs);
    double lmax = 0.0, lmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double l = std::max(gram(i, i), 0.0);
        lmax = std::max(lmax, l);
        lmin = std::min(lmin, l);
    }
    SpanFit fit;
    // Gram = B^T B, so cond(basis) = sqrt(lmax/lmin).
    fit.condition = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
    fit.ok = std::isfinite(fit.condition) && fit.condition <= 1e8;
    fit.coeffs.assign(n, 0.0);
    if (fit.ok) {
        for (int e = 0; e < n; ++e) {
            double proj = 0.0;
            for (int i = 0; i < n; ++i) proj += evecs(i, e) * rhs[i];
            proj /= gram(e, e);
            for (int i = 0; i < n; ++i) fit.coeffs[i] += evecs(i, e) * proj;
        }
        DenseMatrix approx(y.rows, y.cols);
        for (int i = 0; i < n; ++i) axpy(approx, fit.coeffs[i], basis[i]);
        fit.residual = frobenius_norm(add(approx, scale(y, -1.0))) /
                       std::max(1.0, frobenius_norm(y));
    }
    return fit;
}

/// Regresses the output of a black-box linear model onto the hop basis
/// {F^k X : k = 0..K}. The coefficients identify which hops the model's
/// kernel realizes and with what weights; a rank-deficient basis is
/// flagged via ok=false and the caller should resample X.
inline SpanFit numeric_hop_regression(const std::function<DenseMatrix(const DenseMatrix&)>& forward,
                                      const SparseMatrix& f_op, const DenseMatrix& x, int hops) {
    if (hops < 0) throw std::invalid_argument("numeric_hop_regression: hops must be >= 0");
    std::vector<DenseMatrix> basis;
    basis.reserve(hops + 1);
    basis.push_back(x);
    for (int k = 1; k <= hops; ++k) basis.push_back(spmm(f_op, basis.back()));
    return least_squares_span(basis, forward(x));
}

/// Convenience overload: the hop basis operator defaults to the neighbor
/// term of the renormalized propagation.
inline SpanFit numeric_hop_regression(const std::function<DenseMatrix(const DenseMatrix&)>& forward,
                                      const Graph& g, const DenseMatrix& x, int hops) {
    return numeric_hop_regression(forward, renormalized_neighbor(g), x, hops);
}

/// Solves for fusion-head scalars t_0..t_K such that sum_k t_k (I+F)^k has
/// hop profile c: sum_{k>=j} t_k C(k,j) = c_j. The Pascal system is
/// unitriangular, so any target profile is attainable; this is the
/// constructive form of the fusion layer spanning the whole hop space.
inline std::vector<double> fusion_coefficients_for_target(const std::vector<double>& c) {
    const int k = static_cast<int>(c.size()) - 1;
    if (k < 0) throw std::invalid_argument("fusion_coefficients_for_target: empty target");
    std::vector<double> t(c.size());
    for (int j = k; j >= 0; --j) {
        double acc = c[j];
        for (int i = j + 1; i <= k; ++i) acc -= static_cast<double>(binomial(i, j)) * t[i];
        t[j] = acc;
    }
    return t;
}

} // namespace fgcn::kernel
