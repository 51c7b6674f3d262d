// Acceptance gate: every release criterion checked at its stated
// tolerance, one [PASS]/[FAIL] line each, nonzero exit if any fails.
//
// Usage: fgcn_acceptance <path-to-cli-binary>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "fgcn/fgcn.hpp"

using namespace fgcn;
namespace kn = fgcn::kernel;

namespace {

int failures = 0;
std::string cli_path;

void report(int idx, bool ok, const std::string& what, const std::string& detail = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << idx << ". " << what;
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << std::endl;
    if (!ok) ++failures;
}

void safe(int idx, const std::string& what, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(idx, false, what, std::string("unexpected exception: ") + e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string run_cli(const std::string& args, int& exit_code) {
    const std::string cmd = cli_path + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        exit_code = -1;
        return "";
    }
    std::string out;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = ::pclose(pipe);
    exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

Graph er_graph(int n, double p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    return build_graph(edges, n);
}

DenseMatrix random_dense(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

// ============================================================================
// 1. The analysis CLI prints the binomial hop-coefficient rows.
// ============================================================================

const char* kWhat1 = "CLI kernel analysis emits binomial coefficients for K=2 and K=3";

void criterion_1() {
    int c2 = 0, c3 = 0;
    const std::string o2 = run_cli("analyze --hops 2 --scheme shared", c2);
    const std::string o3 = run_cli("analyze --hops 3 --scheme shared", c3);
    const bool has2 = o2.find("coefficients: 1,2,1\n") != std::string::npos;
    const bool has3 = o3.find("coefficients: 1,3,3,1\n") != std::string::npos;
    report(1, c2 == 0 && c3 == 0 && has2 && has3, kWhat1,
           std::string("K=2 line ") + (has2 ? "found" : "MISSING") + ", K=3 line " +
               (has3 ? "found" : "MISSING"));
}

// ============================================================================
// 2. The K=3 computation-tree census matches the hand count.
// ============================================================================

const char* kWhat2 = "K=3 path census is (3,0,1),(2,1,3),(1,2,3),(0,3,1) with 8 paths";

void criterion_2() {
    const kn::PathTable t = kn::enumerate_paths(3);
    const int expect[4][4] = {{0, 3, 0, 1}, {1, 2, 1, 3}, {2, 1, 2, 3}, {3, 0, 3, 1}};
    bool ok = t.rows.size() == 4 && t.total_paths() == 8;
    std::ostringstream got;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const kn::PathRow& r = t.rows[i];
        if (i < 4)
            ok = ok && r.hop == expect[i][0] && r.identity_count == expect[i][1] &&
                 r.fa_count == expect[i][2] && r.paths == expect[i][3];
        got << (i ? " " : "") << "(" << r.identity_count << "," << r.fa_count << "," << r.paths
            << ")";
    }
    report(2, ok, kWhat2, "rows " + got.str() + ", total " + std::to_string(t.total_paths()));
}

// ============================================================================
// 3. Reachable hop subsets per weight scheme, exhaustively, K <= 4.
// ============================================================================

const char* kWhat3 = "hop-subset reachability: shared=full set, skip=prefixes, "
                     "non-shared=contiguous ranges (K<=4)";

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string first_bad;
    for (int K = 1; K <= 4; ++K) {
        const kn::HopSubset full = (1u << (K + 1)) - 1u;

        const auto shared = kn::reachable_hop_subsets(K, kn::Scheme::shared);
        if (shared != std::set<kn::HopSubset>{full}) {
            ok = false;
            if (first_bad.empty()) first_bad = "shared K=" + std::to_string(K);
        }

        if (K >= 2) {
            std::set<kn::HopSubset> prefixes;
            for (int j = 1; j <= K; ++j) prefixes.insert((1u << (j + 1)) - 1u);
            if (kn::reachable_hop_subsets(K, kn::Scheme::shared_skip) != prefixes) {
                ok = false;
                if (first_bad.empty()) first_bad = "skip K=" + std::to_string(K);
            }
        }

        std::set<kn::HopSubset> contiguous;
        for (int a = 0; a <= K; ++a)
            for (int b = a; b <= K; ++b) {
                kn::HopSubset s = 0;
                for (int k = a; k <= b; ++k) s |= 1u << k;
                contiguous.insert(s);
            }
        if (kn::reachable_hop_subsets(K, kn::Scheme::non_shared) != contiguous) {
            ok = false;
            if (first_bad.empty()) first_bad = "non_shared K=" + std::to_string(K);
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 30.0;
    report(3, ok, kWhat3,
           (first_bad.empty() ? std::string("all schemes exact") : "mismatch at " + first_bad) +
               ", " + fmt(secs, 2) + "s (limit 30s)");
}

// ============================================================================
// 4. Numeric span checks at 1e-9: the shared kernel realizes exactly the
//    binomial mix, the fusion heads realize arbitrary mixes, and the
//    shared kernel alone cannot fake the hop-1-only profile.
// ============================================================================

const char* kWhat4 = "hop-space spans: shared kernel = binomials (<=1e-9), fusion heads "
                     "reach arbitrary targets (<=1e-9), shared-only residual > 1e-3";

void criterion_4() {
    bool ok = true;
    double worst_kernel = 0.0;

    // (a) (I+F)^K regressed onto {F^k x} recovers C(K,k).
    for (std::uint64_t seed : {101u, 102u, 103u}) {
        Graph g = er_graph(12, 0.35, seed);
        SparseMatrix f = renormalized_neighbor(g);
        DenseMatrix x = random_dense(12, 3, seed + 7);
        for (int K = 1; K <= 3; ++K) {
            auto forward = [&](const DenseMatrix& in) {
                DenseMatrix y = in;
                for (int k = 0; k < K; ++k) y = add(y, spmm(f, y));
                return y;
            };
            kn::SpanFit fit = kn::numeric_hop_regression(forward, f, x, K);
            ok = ok && fit.ok && fit.residual < 1e-9;
            worst_kernel = std::max(worst_kernel, fit.residual);
            for (int k = 0; k <= K; ++k) {
                const double dev = std::abs(fit.coeffs[k] - double(kn::binomial(K, k)));
                worst_kernel = std::max(worst_kernel, dev);
                ok = ok && dev < 1e-9;
            }
        }
    }

    // (b) Fusion heads solved for a target profile drive the real forward
    // pass to that profile, including the pure hop-1 target.
    double worst_fusion = 0.0;
    {
        const int n = 12, dim = 3, hops = 2;
        Graph g = er_graph(n, 0.4, 111);
        SparseMatrix f = renormalized_neighbor(g);
        std::vector<std::tuple<int, int, double>> trips;
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
        for (int i = 0; i < n; ++i)
            for (int idx = f.row_offsets[i]; idx < f.row_offsets[i + 1]; ++idx)
                trips.emplace_back(i, f.col_indices[idx], f.values[idx]);
        SparseMatrix phi = SparseMatrix::from_triplets(n, n, trips);  // I + F

        ModelConfig cfg;
        cfg.kind = ModelKind::fgcn;
        cfg.hops = hops;
        cfg.input_dim = dim;
        cfg.hidden_dim = dim;
        cfg.label_dim = dim;
        cfg.dropout = 0.0;
        cfg.linear_activations = true;
        DenseMatrix x = random_dense(n, dim, 112);

        std::vector<std::vector<double>> targets{{0.0, 1.0, 0.0}, {1.5, -0.75, 0.25}};
        for (const auto& target : targets) {
            std::vector<double> heads = kn::fusion_coefficients_for_target(target);
            auto forward = [&](const DenseMatrix& in) {
                Rng rng(1);
                ModelParams mp = ModelParams::init(cfg, rng);
                for (int k = 1; k <= hops; ++k)
                    mp.by_name("W" + std::to_string(k)).value = dense_identity(dim);
                for (int k = 0; k <= hops; ++k)
                    mp.by_name("theta" + std::to_string(k)).value =
                        scale(dense_identity(dim), heads[k]);
                Tape t(false);
                return t.value(fgcn_forward(t, cfg, mp, phi, t.input(in), false, rng));
            };
            kn::SpanFit fit = kn::numeric_hop_regression(forward, f, x, hops);
            ok = ok && fit.ok && fit.residual < 1e-9;
            worst_fusion = std::max(worst_fusion, fit.residual);
            for (int k = 0; k <= hops; ++k) {
                const double dev = std::abs(fit.coeffs[k] - target[k]);
                worst_fusion = std::max(worst_fusion, dev);
                ok = ok && dev < 1e-9;
            }
        }
    }

    // (c) Negative control: the best column-space fit of (I+F)^2 X to the
    // hop-1-only response F X keeps a macroscopic residual.
    double min_residual = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 201; seed <= 205; ++seed) {
        const int n = 12, dim = 3;
        Graph g = er_graph(n, 0.4, seed);
        SparseMatrix f = renormalized_neighbor(g);
        DenseMatrix x = random_dense(n, dim, seed + 50);
        DenseMatrix z = add(x, spmm(f, x));
        z = add(z, spmm(f, z));  // z = (I+F)^2 x
        DenseMatrix y = spmm(f, x);

        std::vector<DenseMatrix> columns;
        for (int c = 0; c < dim; ++c) {
            DenseMatrix col(n, 1);
            for (int i = 0; i < n; ++i) col(i, 0) = z(i, c);
            columns.push_back(col);
        }
        double err2 = 0.0, norm2 = 0.0;
        for (int c = 0; c < dim; ++c) {
            DenseMatrix yc(n, 1);
            for (int i = 0; i < n; ++i) yc(i, 0) = y(i, c);
            kn::SpanFit fit = kn::least_squares_span(columns, yc);
            const double yn = frobenius_norm(yc);
            err2 += fit.residual * fit.residual * std::max(1.0, yn) * std::max(1.0, yn);
            norm2 += yn * yn;
        }
        min_residual = std::min(min_residual, std::sqrt(err2 / norm2));
    }
    ok = ok && min_residual > 1e-3;

    report(4, ok, kWhat4,
           "kernel dev " + fmt(worst_kernel, 12) + ", fusion dev " + fmt(worst_fusion, 12) +
               ", control residual >= " + fmt(min_residual, 4));
}

// ============================================================================
// 5. Analytic gradients match finite differences for every model kind.
// ============================================================================

const char* kWhat5 = "gradient check < 1e-6 for every model kind";

void criterion_5() {
    const int n = 12, F = 4, d = 5, L = 3;
    Graph g = er_graph(n, 0.35, 41);
    GraphOperators ops = GraphOperators::build(g);
    DenseMatrix x = random_dense(n, F, 42);
    DenseMatrix y(n, L);
    for (int i = 0; i < n; ++i) y(i, (i * 2) % L) = 1.0;
    DenseMatrix ymulti(n, L);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < L; ++l) ymulti(i, l) = (i >> l) & 1 ? 1.0 : 0.0;
    std::vector<std::uint8_t> mask(n, 0);
    for (int i = 0; i < n; i += 2) mask[i] = 1;
    const std::vector<double> w{0.7, 1.3, 2.0};

    struct Case {
        ModelKind kind;
        int hops;
        bool multilabel;
    };
    const std::vector<Case> cases{{ModelKind::node_mlp, 1, false}, {ModelKind::gcn, 2, false},
                                  {ModelKind::gcn_skip, 3, false}, {ModelKind::gs_mean, 2, false},
                                  {ModelKind::gs_max, 2, false},   {ModelKind::fgcn, 2, true}};

    bool ok = true;
    std::ostringstream detail;
    for (const Case& c : cases) {
        ModelConfig cfg;
        cfg.kind = c.kind;
        cfg.hops = c.hops;
        cfg.input_dim = F;
        cfg.hidden_dim = d;
        cfg.label_dim = L;
        cfg.multilabel = c.multilabel;
        cfg.dropout = 0.5;  // inert: gradients are checked in eval mode
        Rng rng(1000 + static_cast<std::uint64_t>(c.kind));
        ModelParams mp = ModelParams::init(cfg, rng);
        std::vector<Parameter*> params;
        for (Parameter& p : mp.items) params.push_back(&p);

        auto f = [&](Tape& t) {
            Rng fwd_rng(1);
            Value logits = forward_model(t, cfg, mp, ops, t.input(x), false, fwd_rng);
            return cfg.multilabel ? t.sigmoid_bce(logits, ymulti, mask, w)
                                  : t.softmax_xent(logits, y, mask, w);
        };
        const double err = grad_check(f, params);
        ok = ok && err < 1e-6;
        detail << (detail.tellp() > 0 ? ", " : "") << to_string(c.kind) << " "
               << fmt(err, 9);
    }
    report(5, ok, kWhat5, detail.str());
}

// ============================================================================
// 6. The five-split protocol is byte-deterministic for a fixed seed.
// ============================================================================

const char* kWhat6 = "run_protocol reports are byte-identical for equal seeds";

void criterion_6() {
    SbmConfig sc;
    sc.blocks = 2;
    sc.nodes_per_block = 30;
    sc.p_in = 0.7;
    sc.p_out = 0.05;
    sc.feature_noise = 0.3;
    sc.label_rule = LabelRule::node;
    sc.seed = 7;
    Dataset ds = generate_sbm(sc);
    ModelConfig cfg;
    cfg.kind = ModelKind::fgcn;
    cfg.hops = 2;
    cfg.input_dim = ds.X.cols;
    cfg.hidden_dim = 8;
    cfg.label_dim = ds.Y.cols;
    cfg.dropout = 0.5;
    Hyper hyper;
    hyper.max_epochs = 30;
    hyper.min_epochs = 5;
    hyper.patience = 4;

    ProtocolReport a = run_protocol(cfg, ds, 77, hyper);
    ProtocolReport b = run_protocol(cfg, ds, 77, hyper);
    const bool json_equal = to_json(a).dump() == to_json(b).dump();
    const bool csv_equal = protocol_csv(a) == protocol_csv(b);
    report(6, json_equal && csv_equal, kWhat6,
           std::string("json ") + (json_equal ? "identical" : "DIFFERS") + ", csv " +
               (csv_equal ? "identical" : "DIFFERS") + ", mean F1 " +
               fmt(a.mean_test_micro_f1));
}

// ============================================================================
// 7. On a two-hop-labelled block model with features too noisy for a
//    node-only classifier, the fused two-hop model beats both baselines.
// ============================================================================

const char* kWhat7 = "block-model separation: fgcn(K=2) > gcn(K=1) and "
                     ">= node_mlp + 0.15, with node_mlp < 0.5";

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    // Calibrated so the node-only baseline lands well under 0.5 while one
    // hop of averaging still leaves signal for the second hop to add; the
    // ordering below holds across independent protocol seed streams.
    const double kFeatureNoise = 1.2;

    auto protocol_mean = [&](ModelKind kind, int hops, const Dataset& ds,
                             std::uint64_t seed) {
        ModelConfig cfg;
        cfg.kind = kind;
        cfg.hops = hops;
        cfg.input_dim = ds.X.cols;
        cfg.hidden_dim = 32;
        cfg.label_dim = ds.Y.cols;
        cfg.dropout = 0.5;
        return run_protocol(cfg, ds, seed, Hyper{}).mean_test_micro_f1;
    };

    double node = 0.0, gcn1 = 0.0, fgcn2 = 0.0;
    const int num_seeds = 5;
    for (std::uint64_t seed = 1; seed <= num_seeds; ++seed) {
        SbmConfig sc;
        sc.blocks = 4;
        sc.nodes_per_block = 50;
        sc.p_in = 0.15;
        sc.p_out = 0.02;
        sc.feature_noise = kFeatureNoise;
        sc.label_rule = LabelRule::two_hop;
        sc.seed = seed;
        Dataset ds = generate_sbm(sc);
        node += protocol_mean(ModelKind::node_mlp, 1, ds, seed);
        gcn1 += protocol_mean(ModelKind::gcn, 1, ds, seed);
        fgcn2 += protocol_mean(ModelKind::fgcn, 2, ds, seed);
    }
    node /= num_seeds;
    gcn1 /= num_seeds;
    fgcn2 /= num_seeds;

    const double secs = seconds_since(t0);
    const bool ok = node < 0.5 && fgcn2 > gcn1 && fgcn2 >= node + 0.15 && secs < 300.0;
    report(7, ok, kWhat7,
           "node_mlp " + fmt(node) + ", gcn(K=1) " + fmt(gcn1) + ", fgcn(K=2) " + fmt(fgcn2) +
               ", margin over node " + fmt(fgcn2 - node) + ", " + fmt(secs, 1) +
               "s (limit 300s)");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: fgcn_acceptance <path-to-cli-binary>\n";
        return 2;
    }
    cli_path = argv[1];
    std::cout << "acceptance suite (7 criteria)\n";
    safe(1, kWhat1, criterion_1);
    safe(2, kWhat2, criterion_2);
    safe(3, kWhat3, criterion_3);
    safe(4, kWhat4, criterion_4);
    safe(5, kWhat5, criterion_5);
    safe(6, kWhat6, criterion_6);
    safe(7, kWhat7, criterion_7);
    if (failures == 0) {
        std::cout << "all 7 criteria passed\n";
        return 0;
    }
    std::cout << failures << " criteria FAILED\n";
    return 1;
}
