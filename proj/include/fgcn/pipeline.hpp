#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fgcn/autodiff.hpp"
#include "fgcn/graph.hpp"
#include "fgcn/matrix.hpp"
#include "fgcn/models.hpp"
#include "fgcn/rng.hpp"

namespace fgcn {

using json = nlohmann::json;

// ============================================================================
// Dataset
// ============================================================================

/// A node-classification dataset: graph, row-normalized features, and
/// one-hot (multi-class) or 0/1 indicator (multilabel) label rows.
struct Dataset {
    std::string name;
    bool multilabel = false;
    Graph graph;
    DenseMatrix X;
    DenseMatrix Y;

    int num_nodes() const { return graph.num_nodes; }
};

namespace detail {

inline std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::pair<int, int> parse_header(const std::string& line, const std::string& file) {
    std::istringstream ls(line);
    long long a = -1, b = -1;
    char comma = 0;
    if (!(ls >> a >> comma >> b) || comma != ',' || a < 0 || b <= 0) {
        throw std::invalid_argument(file + ":1: expected header \"N,cols\", got \"" + line + "\"");
    }
    std::string rest;
    if (ls >> rest) throw std::invalid_argument(file + ":1: trailing content in header");
    return {static_cast<int>(a), static_cast<int>(b)};
}

inline DenseMatrix read_csv_matrix(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(std::string("missing ") + what + " file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ":1: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto [n, cols] = parse_header(line, path);
    DenseMatrix m(n, cols);
    int row = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= n) {
            std::ostringstream os;
            os << path << ":" << lineno << ": more than " << n << " data rows";
            throw std::invalid_argument(os.str());
        }
        const char* p = line.data();
        const char* end = p + line.size();
        for (int c = 0; c < cols; ++c) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{} || !std::isfinite(v)) {
                std::ostringstream os;
                os << path << ":" << lineno << ": bad value in column " << (c + 1);
                throw std::invalid_argument(os.str());
            }
            p = res.ptr;
            if (c + 1 < cols) {
                if (p == end || *p != ',') {
                    std::ostringstream os;
                    os << path << ":" << lineno << ": expected " << cols << " comma-separated values";
                    throw std::invalid_argument(os.str());
                }
                ++p;
            }
        }
        if (p != end) {
            std::ostringstream os;
            os << path << ":" << lineno << ": trailing content";
            throw std::invalid_argument(os.str());
        }
        // Re-parse now that the field count checked out.
        p = line.data();
        for (int c = 0; c < cols; ++c) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            p = res.ptr;
            if (c + 1 < cols) ++p;
            m(row, c) = v;
        }
        ++row;
    }
    if (row != n) {
        std::ostringstream os;
        os << path << ": expected " << n << " data rows, found " << row;
        throw std::invalid_argument(os.str());
    }
    return m;
}

} // namespace detail

/// Loads a dataset directory: edges.tsv, features.csv, labels.csv,
/// meta.json. Features are L1 row-normalized here. Label rows are
/// validated: entries must be 0/1, and multi-class rows must sum to 1.
/// All failures name the offending file (and line where applicable).
inline Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string meta_path = (fs::path(dir) / "meta.json").string();
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw std::invalid_argument("missing meta file: " + meta_path);
    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(meta_path + ": " + e.what());
    }
    if (!meta.contains("name") || !meta["name"].is_string())
        throw std::invalid_argument(meta_path + ": missing string field \"name\"");
    if (!meta.contains("multilabel") || !meta["multilabel"].is_boolean())
        throw std::invalid_argument(meta_path + ": missing boolean field \"multilabel\"");

    Dataset ds;
    ds.name = meta["name"].get<std::string>();
    ds.multilabel = meta["multilabel"].get<bool>();
    const std::string feat_path = (fs::path(dir) / "features.csv").string();
    const std::string label_path = (fs::path(dir) / "labels.csv").string();
    ds.X = detail::read_csv_matrix(feat_path, "features");
    ds.Y = detail::read_csv_matrix(label_path, "labels");
    if (ds.X.rows != ds.Y.rows) {
        std::ostringstream os;
        os << dir << ": features declare " << ds.X.rows << " nodes but labels declare "
           << ds.Y.rows;
        throw std::invalid_argument(os.str());
    }
    for (int i = 0; i < ds.Y.rows; ++i) {
        double sum = 0.0;
        for (int l = 0; l < ds.Y.cols; ++l) {
            const double v = ds.Y(i, l);
            if (v != 0.0 && v != 1.0) {
                std::ostringstream os;
                os << label_path << ":" << (i + 2) << ": label entries must be 0 or 1";
                throw std::invalid_argument(os.str());
            }
            sum += v;
        }
        if (!ds.multilabel && sum != 1.0) {
            std::ostringstream os;
            os << label_path << ":" << (i + 2) << ": multi-class row must have exactly one 1";
            throw std::invalid_argument(os.str());
        }
    }
    const std::string edge_path = (fs::path(dir) / "edges.tsv").string();
    ds.graph = build_graph(read_edge_list(edge_path, ds.X.rows), ds.X.rows);
    row_normalize(ds.X);
    return ds;
}

/// Writes a dataset directory in the load_dataset format. `extra_meta` is
/// merged into meta.json (e.g. a generator echo); load_dataset ignores
/// unknown keys.
inline void save_dataset(const Dataset& ds, const std::string& dir, const json& extra_meta = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_edge_list((fs::path(dir) / "edges.tsv").string(), ds.graph);
    {
        std::ofstream out(fs::path(dir) / "features.csv");
        out << ds.X.rows << "," << ds.X.cols << "\n";
        for (int i = 0; i < ds.X.rows; ++i) {
            for (int j = 0; j < ds.X.cols; ++j)
                out << (j ? "," : "") << detail::shortest(ds.X(i, j));
            out << "\n";
        }
        if (!out) throw std::runtime_error("short write: features.csv");
    }
    {
        std::ofstream out(fs::path(dir) / "labels.csv");
        out << ds.Y.rows << "," << ds.Y.cols << "\n";
        for (int i = 0; i < ds.Y.rows; ++i) {
            for (int j = 0; j < ds.Y.cols; ++j)
                out << (j ? "," : "") << static_cast<int>(ds.Y(i, j));
            out << "\n";
        }
        if (!out) throw std::runtime_error("short write: labels.csv");
    }
    {
        json meta = extra_meta.is_object() ? extra_meta : json::object();
        meta["name"] = ds.name;
        meta["multilabel"] = ds.multilabel;
        std::ofstream out(fs::path(dir) / "meta.json");
        out << meta.dump(2) << "\n";
        if (!out) throw std::runtime_error("short write: meta.json");
    }
}

// ============================================================================
// Splits
// ============================================================================

/// Protocol node splits: one held-out test set (20% of nodes) and five
/// independently drawn train samples of 10% each from the remaining
/// nodes. Each sample's first 20% (floor) is its validation set;
/// train_masks hold the gradient nodes (sample minus validation).
struct Splits {
    std::vector<std::uint8_t> test_mask;
    std::vector<std::vector<std::uint8_t>> train_masks;  // 5 entries
    std::vector<std::vector<std::uint8_t>> val_masks;    // 5 entries
};

inline Splits make_splits(const Dataset& ds, std::uint64_t seed) {
    const int n = ds.num_nodes();
    if (n < 20) throw std::invalid_argument("make_splits: need at least 20 nodes");
    const int n_test = n / 5;         // floor(0.2 N)
    const int n_sample = n / 10;      // floor(0.1 N)
    const int n_val = n_sample / 5;   // floor(0.2 |sample|)
    if (n_test < 1 || n_sample - n_val < 1 || n_val < 1) {
        std::ostringstream os;
        os << "make_splits: " << n << " nodes are too few for the 20/10/20% protocol "
           << "(test=" << n_test << ", train=" << (n_sample - n_val) << ", val=" << n_val << ")";
        throw std::invalid_argument(os.str());
    }
    Rng rng(mix_seed(seed, 0));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    shuffle(perm, rng);

    Splits sp;
    sp.test_mask.assign(n, 0);
    for (int i = 0; i < n_test; ++i) sp.test_mask[perm[i]] = 1;
    std::vector<int> pool(perm.begin() + n_test, perm.end());
    for (int s = 0; s < 5; ++s) {
        std::vector<int> shuffled = pool;
        shuffle(shuffled, rng);
        std::vector<std::uint8_t> train(n, 0), val(n, 0);
        for (int i = 0; i < n_sample; ++i)
            (i < n_val ? val : train)[shuffled[i]] = 1;
        sp.train_masks.push_back(std::move(train));
        sp.val_masks.push_back(std::move(val));
    }
    return sp;
}

// ============================================================================
// Metrics and prediction
// ============================================================================

/// Hard label assignments from logits: multi-class argmax (ties resolved
/// to the lowest index), multilabel thresholded at logit >= 0 (that is,
/// sigmoid >= 0.5).
inline DenseMatrix predict_labels(const DenseMatrix& logits, bool multilabel) {
    DenseMatrix out(logits.rows, logits.cols);
    if (multilabel) {
        for (std::size_t i = 0; i < logits.data.size(); ++i)
            out.data[i] = logits.data[i] >= 0.0 ? 1.0 : 0.0;
        return out;
    }
    for (int i = 0; i < logits.rows; ++i) {
        int best = 0;
        for (int l = 1; l < logits.cols; ++l)
            if (logits(i, l) > logits(i, best)) best = l;
        out(i, best) = 1.0;
    }
    return out;
}

/// Micro-averaged F1 over the masked rows: TP/FP/FN are pooled across all
/// (node, label) pairs before the harmonic mean. Returns 0 when the pooled
/// numerator and denominator are both zero.
inline double micro_f1(const DenseMatrix& pred, const DenseMatrix& truth,
                       const std::vector<std::uint8_t>& mask) {
    check_shape(pred.same_shape(truth), "micro_f1");
    if (static_cast<int>(mask.size()) != pred.rows)
        throw std::invalid_argument("micro_f1: mask length != rows");
    long long tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < pred.rows; ++i) {
        if (!mask[i]) continue;
        for (int l = 0; l < pred.cols; ++l) {
            const bool p = pred(i, l) != 0.0;
            const bool t = truth(i, l) != 0.0;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
    }
    const long long denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

/// Mean shortfall from the per-column best: scores[m][d] is model m's
/// score on dataset d, and the penalty of model m is the average over d of
/// (max_m' scores[m'][d] - scores[m][d]).
inline std::vector<double> compute_penalties(const std::vector<std::vector<double>>& scores) {
    if (scores.empty()) return {};
    const std::size_t cols = scores.front().size();
    for (const auto& row : scores)
        if (row.size() != cols)
            throw std::invalid_argument("compute_penalties: ragged score table");
    if (cols == 0) throw std::invalid_argument("compute_penalties: no datasets");
    std::vector<double> best(cols, -std::numeric_limits<double>::infinity());
    for (const auto& row : scores)
        for (std::size_t d = 0; d < cols; ++d) best[d] = std::max(best[d], row[d]);
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& row : scores) {
        double acc = 0.0;
        for (std::size_t d = 0; d < cols; ++d) acc += best[d] - row[d];
        out.push_back(acc / static_cast<double>(cols));
    }
    return out;
}

// ============================================================================
// Training
// ============================================================================

struct Hyper {
    double lr = 1e-2;
    double l2 = 5e-4;
    int max_epochs = 2000;
    int min_epochs = 50;
    int patience = 30;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_micro_f1 = 0.0;
    double val_micro_f1 = 0.0;
};

struct TrainReport {
    ModelConfig config;
    Hyper hyper;
    std::uint64_t seed = 0;
    int stopped_epoch = 0;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<EpochStats> epochs;
    double test_micro_f1 = -1.0;      // filled by run_protocol; -1 = not evaluated
    double wall_clock_seconds = 0.0;  // in-memory only, never serialized
};

inline json to_json(const ModelConfig& cfg) {
    return json{{"model", to_string(cfg.kind)},
                {"hops", cfg.hops},
                {"input_dim", cfg.input_dim},
                {"hidden_dim", cfg.hidden_dim},
                {"label_dim", cfg.label_dim},
                {"multilabel", cfg.multilabel},
                {"dropout", cfg.dropout}};
}

inline json to_json(const Hyper& h) {
    return json{{"lr", h.lr},
                {"l2", h.l2},
                {"max_epochs", h.max_epochs},
                {"min_epochs", h.min_epochs},
                {"patience", h.patience}};
}

/// Deterministic serialization: wall-clock is deliberately omitted so that
/// equal seeds produce byte-identical artifacts.
inline json to_json(const TrainReport& r) {
    json epochs = json::array();
    for (const EpochStats& e : r.epochs)
        epochs.push_back(json{{"train_loss", e.train_loss},
                              {"val_loss", e.val_loss},
                              {"train_micro_f1", e.train_micro_f1},
                              {"val_micro_f1", e.val_micro_f1}});
    return json{{"config", to_json(r.config)}, {"hyper", to_json(r.hyper)},
                {"seed", r.seed},              {"stopped_epoch", r.stopped_epoch},
                {"best_epoch", r.best_epoch},  {"best_val_loss", r.best_val_loss},
                {"test_micro_f1", r.test_micro_f1}, {"epochs", epochs}};
}

namespace detail {

struct EvalResult {
    double loss = 0.0;
    double f1 = 0.0;
};

inline Value loss_op(Tape& t, const Dataset& ds, Value logits,
                     const std::vector<std::uint8_t>& mask, const std::vector<double>& w) {
    return ds.multilabel ? t.sigmoid_bce(logits, ds.Y, mask, w)
                         : t.softmax_xent(logits, ds.Y, mask, w);
}

} // namespace detail

/// Full-batch training with the adaptive-patience schedule:
///   - Adam on the train mask's weighted loss (class weights from that
///     mask), validation nodes strictly excluded from gradients;
///   - on every epoch without strict validation-loss improvement a
///     patience counter grows; exhaustions are deferred until min_epochs;
///   - each exhaustion halves lr and patience (ceil); a second exhaustion
///     with no improvement in between stops training;
///   - parameters from the best-validation epoch are returned.
inline std::pair<ModelParams, TrainReport> train(const ModelConfig& cfg, const Dataset& ds,
                                                 const std::vector<std::uint8_t>& train_mask,
                                                 const std::vector<std::uint8_t>& val_mask,
                                                 const Hyper& hyper, std::uint64_t seed) {
    validate(cfg);
    if (hyper.max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
    if (hyper.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
    if (hyper.lr < 0.0 || hyper.l2 < 0.0) throw std::invalid_argument("train: negative lr/l2");
    if (static_cast<int>(train_mask.size()) != ds.num_nodes() ||
        static_cast<int>(val_mask.size()) != ds.num_nodes())
        throw std::invalid_argument("train: mask length != node count");
    int n_train = 0, n_val = 0;
    for (int i = 0; i < ds.num_nodes(); ++i) {
        if (train_mask[i] && val_mask[i])
            throw std::invalid_argument("train: train and val masks overlap at node " +
                                        std::to_string(i));
        n_train += train_mask[i] != 0;
        n_val += val_mask[i] != 0;
    }
    if (n_train == 0 || n_val == 0)
        throw std::invalid_argument("train: train and val masks must be non-empty");

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(mix_seed(seed, 0));
    ModelParams params = ModelParams::init(cfg, rng);
    GraphOperators ops = GraphOperators::build(ds.graph);
    const std::vector<double> weights = class_weights(ds.Y, train_mask);

    TrainReport report;
    report.config = cfg;
    report.hyper = hyper;
    report.seed = seed;

    double lr = hyper.lr;
    int patience = hyper.patience;
    int since_improve = 0;
    bool exhausted_once = false;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<DenseMatrix> best_snapshot = params.snapshot();
    int best_epoch = 0;

    for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        {
            Tape t(true);
            Value x = t.input(ds.X);
            Value logits = forward_model(t, cfg, params, ops, x, true, rng);
            Value loss = detail::loss_op(t, ds, logits, train_mask, weights);
            if (!std::isfinite(t.scalar(loss))) {
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            params.zero_grad();
            t.backward(loss);
            for (Parameter& p : params.items) adam_step(p, lr, 0.9, 0.999, 1e-8, hyper.l2);
        }

        EpochStats stats;
        {
            Tape t(false);
            Value x = t.input(ds.X);
            Value logits = forward_model(t, cfg, params, ops, x, false, rng);
            stats.train_loss = t.scalar(detail::loss_op(t, ds, logits, train_mask, weights));
            stats.val_loss = t.scalar(detail::loss_op(t, ds, logits, val_mask, weights));
            const DenseMatrix pred = predict_labels(t.value(logits), ds.multilabel);
            stats.train_micro_f1 = micro_f1(pred, ds.Y, train_mask);
            stats.val_micro_f1 = micro_f1(pred, ds.Y, val_mask);
        }
        if (!std::isfinite(stats.val_loss)) {
            throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        report.epochs.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            best_snapshot = params.snapshot();
            best_epoch = epoch;
            since_improve = 0;
            exhausted_once = false;
        } else {
            ++since_improve;
        }

        report.stopped_epoch = epoch;
        if (epoch >= hyper.min_epochs && since_improve >= patience) {
            if (exhausted_once) break;  // second consecutive exhaustion
            exhausted_once = true;
            lr *= 0.5;
            patience = (patience + 1) / 2;
            since_improve = 0;
        }
    }

    params.restore(best_snapshot);
    report.best_epoch = best_epoch;
    report.best_val_loss = best_val;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(params), std::move(report)};
}

// ============================================================================
// Protocol
// ============================================================================

/// Thread cap for split-level parallelism, from FGCN_THREADS (default 1).
inline int thread_cap_from_env() {
    const char* e = std::getenv("FGCN_THREADS");
    if (!e || !*e) return 1;
    char* end = nullptr;
    const long v = std::strtol(e, &end, 10);
    if (end == e || *end != '\0' || v < 1 || v > 256)
        throw std::invalid_argument("FGCN_THREADS must be an integer in [1,256], got \"" +
                                    std::string(e) + "\"");
    return static_cast<int>(v);
}

struct ProtocolReport {
    ModelConfig config;
    Hyper hyper;
    std::uint64_t seed = 0;
    std::string dataset;
    std::vector<TrainReport> splits;
    double mean_test_micro_f1 = 0.0;
};

inline json to_json(const ProtocolReport& r) {
    json splits = json::array();
    for (const TrainReport& tr : r.splits) splits.push_back(to_json(tr));
    return json{{"config", to_json(r.config)},
                {"hyper", to_json(r.hyper)},
                {"seed", r.seed},
                {"dataset", r.dataset},
                {"splits", splits},
                {"mean_test_micro_f1", r.mean_test_micro_f1}};
}

/// CSV form of a protocol report: model, split, epoch_stopped,
/// test_micro_f1; one row per split, 1-based split ids.
inline std::string protocol_csv(const ProtocolReport& r) {
    std::ostringstream os;
    os << "model,split,epoch_stopped,test_micro_f1\n";
    for (std::size_t i = 0; i < r.splits.size(); ++i)
        os << to_string(r.config.kind) << "," << (i + 1) << "," << r.splits[i].stopped_epoch
           << "," << detail::shortest(r.splits[i].test_micro_f1) << "\n";
    return os.str();
}

/// Runs the five-split protocol: shared 20% test set, five independent 10%
/// train samples (20% of each held for validation), one model trained per
/// split with a split-specific seed, test micro-F1 evaluated at the best
/// validation epoch, and the five scores averaged. Splits may run
/// concurrently (FGCN_THREADS); results are identical either way.
inline ProtocolReport run_protocol(const ModelConfig& cfg, const Dataset& ds, std::uint64_t seed,
                                   const Hyper& hyper = {}) {
    const Splits sp = make_splits(ds, seed);
    ProtocolReport report;
    report.config = cfg;
    report.hyper = hyper;
    report.seed = seed;
    report.dataset = ds.name;
    report.splits.resize(5);

    auto run_split = [&](int i) {
        auto [params, tr] = train(cfg, ds, sp.train_masks[i], sp.val_masks[i], hyper,
                                  mix_seed(seed, static_cast<std::uint64_t>(i) + 1));
        GraphOperators ops = GraphOperators::build(ds.graph);
        Tape t(false);
        Rng unused(0);
        Value logits = forward_model(t, cfg, params, ops, t.input(ds.X), false, unused);
        tr.test_micro_f1 = micro_f1(predict_labels(t.value(logits), ds.multilabel), ds.Y,
                                    sp.test_mask);
        report.splits[i] = std::move(tr);
    };

    const int cap = thread_cap_from_env();
    if (cap <= 1) {
        for (int i = 0; i < 5; ++i) run_split(i);
    } else {
        for (int base = 0; base < 5; base += cap) {
            std::vector<std::future<void>> wave;
            for (int i = base; i < std::min(5, base + cap); ++i)
                wave.push_back(std::async(std::launch::async, run_split, i));
            for (auto& f : wave) f.get();
        }
    }

    double acc = 0.0;
    for (const TrainReport& tr : report.splits) acc += tr.test_micro_f1;
    report.mean_test_micro_f1 = acc / 5.0;
    return report;
}

// ============================================================================
// Stochastic block model generator
// ============================================================================

enum class LabelRule { node, one_hop, two_hop };

inline const char* to_string(LabelRule r) {
    switch (r) {
        case LabelRule::node: return "node";
        case LabelRule::one_hop: return "one_hop";
        case LabelRule::two_hop: return "two_hop";
    }
    return "?";
}

inline LabelRule label_rule_from_string(const std::string& s) {
    if (s == "node") return LabelRule::node;
    if (s == "one_hop") return LabelRule::one_hop;
    if (s == "two_hop") return LabelRule::two_hop;
    throw std::invalid_argument("unknown label rule: " + s);
}

struct SbmConfig {
    int blocks = 4;
    int nodes_per_block = 50;
    double p_in = 0.15;
    double p_out = 0.02;
    double feature_noise = 0.0;
    LabelRule label_rule = LabelRule::node;
    std::uint64_t seed = 0;
};

/// Samples a stochastic block model dataset. Features are the node's
/// one-hot block indicator plus iid Gaussian noise of the given scale
/// (then row-normalized like any loaded dataset). Labels are one-hot block
/// assignments under the chosen rule: the node's own block, or the
/// majority block over its 1-hop or (distance <= 2) 2-hop neighborhood,
/// ties to the lowest block id, isolated nodes falling back to their own
/// block.
inline Dataset generate_sbm(const SbmConfig& cfg) {
    if (cfg.blocks < 1 || cfg.nodes_per_block < 1)
        throw std::invalid_argument("generate_sbm: blocks and nodes_per_block must be >= 1");
    if (cfg.p_in < 0.0 || cfg.p_in > 1.0 || cfg.p_out < 0.0 || cfg.p_out > 1.0)
        throw std::invalid_argument("generate_sbm: edge probabilities must be in [0,1]");
    if (cfg.feature_noise < 0.0) throw std::invalid_argument("generate_sbm: negative noise");

    const int n = cfg.blocks * cfg.nodes_per_block;
    auto block = [&](int i) { return i / cfg.nodes_per_block; };
    Rng rng(mix_seed(cfg.seed, 0));

    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double p = block(i) == block(j) ? cfg.p_in : cfg.p_out;
            if (rng.uniform() < p) edges.emplace_back(i, j);
        }

    Dataset ds;
    ds.name = std::string("sbm_") + to_string(cfg.label_rule);
    ds.multilabel = false;
    ds.graph = build_graph(edges, n);

    ds.X = DenseMatrix(n, cfg.blocks);
    for (int i = 0; i < n; ++i)
        for (int f = 0; f < cfg.blocks; ++f)
            ds.X(i, f) = (f == block(i) ? 1.0 : 0.0) + cfg.feature_noise * rng.normal();
    row_normalize(ds.X);

    auto majority_block = [&](const std::vector<int>& nodes, int fallback) {
        if (nodes.empty()) return fallback;
        std::vector<int> cnt(cfg.blocks, 0);
        for (int v : nodes) ++cnt[block(v)];
        int best = 0;
        for (int b = 1; b < cfg.blocks; ++b)
            if (cnt[b] > cnt[best]) best = b;
        return best;
    };

    ds.Y = DenseMatrix(n, cfg.blocks);
    for (int i = 0; i < n; ++i) {
        int lab = block(i);
        if (cfg.label_rule != LabelRule::node) {
            std::vector<int> hood;
            auto [b1, e1] = ds.graph.neighbors(i);
            hood.assign(b1, e1);
            if (cfg.label_rule == LabelRule::two_hop) {
                std::vector<std::uint8_t> seen(n, 0);
                seen[i] = 1;
                for (int v : hood) seen[v] = 1;
                const std::size_t first_ring = hood.size();
                for (std::size_t k = 0; k < first_ring; ++k) {
                    auto [b2, e2] = ds.graph.neighbors(hood[k]);
                    for (const int* p = b2; p != e2; ++p)
                        if (!seen[*p]) {
                            seen[*p] = 1;
                            hood.push_back(*p);
                        }
                }
            }
            lab = majority_block(hood, block(i));
        }
        ds.Y(i, lab) = 1.0;
    }
    return ds;
}

} // namespace fgcn
