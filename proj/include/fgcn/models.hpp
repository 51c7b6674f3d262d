#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgcn/autodiff.hpp"
#include "fgcn/graph.hpp"
#include "fgcn/matrix.hpp"
#include "fgcn/rng.hpp"

namespace fgcn {

// ============================================================================
// Configuration
// ============================================================================

enum class ModelKind { node_mlp, gcn, gcn_skip, gs_mean, gs_max, fgcn };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::node_mlp: return "node_mlp";
        case ModelKind::gcn: return "gcn";
        case ModelKind::gcn_skip: return "gcn_skip";
        case ModelKind::gs_mean: return "gs_mean";
        case ModelKind::gs_max: return "gs_max";
        case ModelKind::fgcn: return "fgcn";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "node_mlp") return ModelKind::node_mlp;
    if (s == "gcn") return ModelKind::gcn;
    if (s == "gcn_skip") return ModelKind::gcn_skip;
    if (s == "gs_mean") return ModelKind::gs_mean;
    if (s == "gs_max") return ModelKind::gs_max;
    if (s == "fgcn") return ModelKind::fgcn;
    throw std::invalid_argument("unknown model kind: " + s);
}

/// No model here carries bias terms; every layer is a (propagate,) multiply,
/// activate composition and the loss layer applies softmax/sigmoid itself.
/// `linear_activations` swaps the hidden ReLUs for identity, which the
/// kernel-capacity analysis relies on; it is not meant for training.
struct ModelConfig {
    ModelKind kind = ModelKind::fgcn;
    int hops = 2;          // K; ignored by node_mlp
    int input_dim = 0;     // F
    int hidden_dim = 64;   // d
    int label_dim = 0;     // L
    bool multilabel = false;
    double dropout = 0.5;
    bool linear_activations = false;
};

inline void validate(const ModelConfig& cfg) {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ModelConfig: " + m); };
    if (cfg.input_dim <= 0) fail("input_dim must be positive");
    if (cfg.label_dim <= 0) fail("label_dim must be positive");
    if (cfg.hidden_dim <= 0) fail("hidden_dim must be positive");
    if (cfg.kind != ModelKind::node_mlp && cfg.hops < 1) fail("hops must be >= 1");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) fail("dropout must be in [0,1)");
}

// ============================================================================
// Parameters per model
// ============================================================================

/// The named parameter collection of one model instance, in a fixed
/// enumeration order (initialization draws follow this order):
///   node_mlp:  W1 (FxD), W2 (DxL)
///   gcn[,skip]: W1 (FxD), W2..W{K-1} (DxD), WL (DxL); K=1 has only WL (FxL)
///   gs_mean/max: Wcat1 (2FxD), Wcat2..WcatK (2DxD), WL (DxL)
///   fgcn:      W1 (FxD), W2..WK (DxD), theta0..thetaK (DxL)
struct ModelParams {
    std::vector<Parameter> items;

    static ModelParams init(const ModelConfig& cfg, Rng& rng) {
        validate(cfg);
        ModelParams mp;
        const int f = cfg.input_dim, d = cfg.hidden_dim, l = cfg.label_dim, k = cfg.hops;
        auto push = [&](const std::string& name, int r, int c) {
            mp.items.emplace_back(name, r, c);
        };
        switch (cfg.kind) {
            case ModelKind::node_mlp:
                push("W1", f, d);
                push("W2", d, l);
                break;
            case ModelKind::gcn:
            case ModelKind::gcn_skip:
                for (int i = 1; i <= k - 1; ++i)
                    push("W" + std::to_string(i), i == 1 ? f : d, d);
                push("WL", k == 1 ? f : d, l);
                break;
            case ModelKind::gs_mean:
            case ModelKind::gs_max:
                for (int i = 1; i <= k; ++i)
                    push("Wcat" + std::to_string(i), 2 * (i == 1 ? f : d), d);
                push("WL", d, l);
                break;
            case ModelKind::fgcn:
                for (int i = 1; i <= k; ++i)
                    push("W" + std::to_string(i), i == 1 ? f : d, d);
                for (int i = 0; i <= k; ++i)
                    push("theta" + std::to_string(i), d, l);
                break;
        }
        for (Parameter& p : mp.items) glorot_init(p, rng);
        return mp;
    }

    Parameter& by_name(const std::string& name) {
        for (Parameter& p : items)
            if (p.name == name) return p;
        throw std::invalid_argument("no parameter named " + name);
    }

    std::vector<Parameter*> pointers() {
        std::vector<Parameter*> out;
        out.reserve(items.size());
        for (Parameter& p : items) out.push_back(&p);
        return out;
    }

    void zero_grad() {
        for (Parameter& p : items) p.zero_grad();
    }

    /// Deep copy of the current values (checkpointing).
    std::vector<DenseMatrix> snapshot() const {
        std::vector<DenseMatrix> out;
        out.reserve(items.size());
        for (const Parameter& p : items) out.push_back(p.value);
        return out;
    }

    void restore(const std::vector<DenseMatrix>& snap) {
        if (snap.size() != items.size())
            throw std::invalid_argument("snapshot size mismatch");
        for (std::size_t i = 0; i < items.size(); ++i) items[i].value = snap[i];
    }
};

// ============================================================================
// Graph operators shared by the forwards
// ============================================================================

/// Precomputed propagation operators for one graph. `graph` must outlive
/// any tape built against this set.
struct GraphOperators {
    const Graph* graph = nullptr;
    SparseMatrix lhat;    // renormalized propagation, symmetric
    SparseMatrix mean;    // D^-1 A
    SparseMatrix mean_t;  // transpose of mean

    static GraphOperators build(const Graph& g) {
        GraphOperators ops;
        ops.graph = &g;
        ops.lhat = renormalized_propagation(g);
        ops.mean = mean_propagation(g);
        ops.mean_t = transpose(ops.mean);
        return ops;
    }
};

namespace detail {

inline Value hidden_act(Tape& t, const ModelConfig& cfg, Value v) {
    return cfg.linear_activations ? v : t.relu(v);
}

inline Value drop(Tape& t, const ModelConfig& cfg, Value v, bool training, Rng& rng) {
    return t.dropout(v, cfg.dropout, training, rng);
}

} // namespace detail

// ============================================================================
// Forward passes (logits; losses are applied by the caller)
// ============================================================================

/// Two-layer perceptron on raw node features; the graph is ignored.
inline Value node_mlp_forward(Tape& t, const ModelConfig& cfg, ModelParams& params, Value x,
                              bool training, Rng& rng) {
    Value h = detail::hidden_act(
        t, cfg, t.matmul(detail::drop(t, cfg, x, training, rng), t.param(params.by_name("W1"))));
    return t.matmul(detail::drop(t, cfg, h, training, rng), t.param(params.by_name("W2")));
}

/// K-hop GCN: h_k = act(Lhat h_{k-1} W_k) for k < K, and the K-th
/// propagation feeds the label weight directly (logits, no activation).
inline Value gcn_forward(Tape& t, const ModelConfig& cfg, ModelParams& params,
                         const SparseMatrix& lhat, Value x, bool training, Rng& rng) {
    Value h = x;
    for (int k = 1; k <= cfg.hops - 1; ++k) {
        Value hd = detail::drop(t, cfg, h, training, rng);
        h = detail::hidden_act(
            t, cfg, t.matmul(t.spmm(lhat, lhat, hd), t.param(params.by_name("W" + std::to_string(k)))));
    }
    Value hd = detail::drop(t, cfg, h, training, rng);
    return t.matmul(t.spmm(lhat, lhat, hd), t.param(params.by_name("WL")));
}

/// GCN with additive skips: h_k = act(Lhat h_{k-1} W_k) + h_{k-1} at every
/// layer from the second on whose input/output widths agree. Hidden layers
/// are d-to-d, so they always qualify; the folded label layer qualifies
/// only when hidden_dim == label_dim.
inline Value gcn_skip_forward(Tape& t, const ModelConfig& cfg, ModelParams& params,
                              const SparseMatrix& lhat, Value x, bool training, Rng& rng) {
    Value h = x;
    for (int k = 1; k <= cfg.hops - 1; ++k) {
        Value hd = detail::drop(t, cfg, h, training, rng);
        Value pre = detail::hidden_act(
            t, cfg, t.matmul(t.spmm(lhat, lhat, hd), t.param(params.by_name("W" + std::to_string(k)))));
        h = (k >= 2) ? t.add(pre, h) : pre;
    }
    Value hd = detail::drop(t, cfg, h, training, rng);
    Value logits = t.matmul(t.spmm(lhat, lhat, hd), t.param(params.by_name("WL")));
    if (cfg.hops >= 2 && t.value(h).cols == t.value(logits).cols) logits = t.add(logits, h);
    return logits;
}

/// GraphSAGE with full-neighborhood mean or max aggregation: each of the K
/// layers concatenates the node block with the aggregate and multiplies the
/// stacked weight; a separate label layer follows.
inline Value graphsage_forward(Tape& t, const ModelConfig& cfg, ModelParams& params,
                               const GraphOperators& ops, Value x, bool training, Rng& rng) {
    Value h = x;
    for (int k = 1; k <= cfg.hops; ++k) {
        Value hd = detail::drop(t, cfg, h, training, rng);
        Value agg = cfg.kind == ModelKind::gs_mean ? t.spmm(ops.mean, ops.mean_t, hd)
                                                   : t.neighbor_max(*ops.graph, hd);
        h = detail::hidden_act(
            t, cfg,
            t.matmul(t.concat_cols(hd, agg), t.param(params.by_name("Wcat" + std::to_string(k)))));
    }
    return t.matmul(detail::drop(t, cfg, h, training, rng), t.param(params.by_name("WL")));
}

/// Fusion GCN: a zero-hop head h_0 = act(X W_1) sharing W_1 with the first
/// propagation layer, K propagated layers g_k = act(Lhat g_{k-1} W_k), and
/// a linear fusion sum(h_k theta_k) over all K+1 hop outputs.
inline Value fgcn_forward(Tape& t, const ModelConfig& cfg, ModelParams& params,
                          const SparseMatrix& lhat, Value x, bool training, Rng& rng) {
    Parameter& w1 = params.by_name("W1");
    Value h0 = detail::hidden_act(
        t, cfg, t.matmul(detail::drop(t, cfg, x, training, rng), t.param(w1)));
    Value logits =
        t.matmul(detail::drop(t, cfg, h0, training, rng), t.param(params.by_name("theta0")));
    Value g = x;
    for (int k = 1; k <= cfg.hops; ++k) {
        Value gd = detail::drop(t, cfg, g, training, rng);
        g = detail::hidden_act(
            t, cfg, t.matmul(t.spmm(lhat, lhat, gd), t.param(params.by_name("W" + std::to_string(k)))));
        Value head = t.matmul(detail::drop(t, cfg, g, training, rng),
                              t.param(params.by_name("theta" + std::to_string(k))));
        logits = t.add(logits, head);
    }
    return logits;
}

/// Dispatch by cfg.kind.
inline Value forward_model(Tape& t, const ModelConfig& cfg, ModelParams& params,
                           const GraphOperators& ops, Value x, bool training, Rng& rng) {
    validate(cfg);
    switch (cfg.kind) {
        case ModelKind::node_mlp:
            return node_mlp_forward(t, cfg, params, x, training, rng);
        case ModelKind::gcn:
            return gcn_forward(t, cfg, params, ops.lhat, x, training, rng);
        case ModelKind::gcn_skip:
            return gcn_skip_forward(t, cfg, params, ops.lhat, x, training, rng);
        case ModelKind::gs_mean:
        case ModelKind::gs_max:
            return graphsage_forward(t, cfg, params, ops, x, training, rng);
        case ModelKind::fgcn:
            return fgcn_forward(t, cfg, params, ops.lhat, x, training, rng);
    }
    throw std::logic_error("unreachable model kind");
}

// ============================================================================
// Class weighting
// ============================================================================

/// Inverse-frequency class weights over the masked rows:
/// w_l = total / (L * count_l), clamped to [1e-3, 1e3]; labels absent from
/// the mask get the upper clamp. `labels` holds one-hot rows (multi-class)
/// or 0/1 indicator rows (multilabel); counts are column sums either way.
inline std::vector<double> class_weights(const DenseMatrix& labels,
                                         const std::vector<std::uint8_t>& mask) {
    if (static_cast<int>(mask.size()) != labels.rows)
        throw std::invalid_argument("class_weights: mask length != rows");
    int total = 0;
    std::vector<double> count(labels.cols, 0.0);
    for (int i = 0; i < labels.rows; ++i) {
        if (!mask[i]) continue;
        ++total;
        for (int l = 0; l < labels.cols; ++l) count[l] += labels(i, l);
    }
    if (total == 0) throw std::invalid_argument("class_weights: empty mask");
    std::vector<double> w(labels.cols);
    for (int l = 0; l < labels.cols; ++l) {
        w[l] = count[l] > 0.0 ? static_cast<double>(total) / (labels.cols * count[l]) : 1e3;
        w[l] = std::min(1e3, std::max(1e-3, w[l]));
    }
    return w;
}

} // namespace fgcn
