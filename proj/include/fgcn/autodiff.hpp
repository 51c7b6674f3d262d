#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fgcn/graph.hpp"
#include "fgcn/matrix.hpp"
#include "fgcn/rng.hpp"

namespace fgcn {

/// Thrown when a computation leaves the finite range (NaN/inf loss or
/// gradient). The CLI maps this to its numerical-failure exit code.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Parameters
// ============================================================================

/// A trainable matrix with its gradient accumulator and Adam state.
struct Parameter {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;
    DenseMatrix adam_m;
    DenseMatrix adam_v;
    long long adam_t = 0;

    Parameter() = default;
    Parameter(std::string n, int rows, int cols)
        : name(std::move(n)),
          value(rows, cols),
          grad(rows, cols),
          adam_m(rows, cols),
          adam_v(rows, cols) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

/// Glorot (Xavier) uniform fill: U(-b, b) with b = sqrt(6/(fan_in+fan_out)),
/// fan_in = rows, fan_out = cols. Entries are drawn row-major.
inline void glorot_init(Parameter& p, Rng& rng) {
    const double b = std::sqrt(6.0 / (p.value.rows + p.value.cols));
    for (double& v : p.value.data) v = rng.uniform(-b, b);
}

/// One Adam update. L2 regularization is folded in as grad += l2 * value
/// before the moment updates; bias correction uses the parameter's own
/// step counter.
inline void adam_step(Parameter& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8, double l2 = 0.0) {
    if (l2 != 0.0) axpy(p.grad, l2, p.value);
    p.adam_t += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(p.adam_t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(p.adam_t));
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
        const double g = p.grad.data[i];
        p.adam_m.data[i] = beta1 * p.adam_m.data[i] + (1.0 - beta1) * g;
        p.adam_v.data[i] = beta2 * p.adam_v.data[i] + (1.0 - beta2) * g * g;
        const double mhat = p.adam_m.data[i] / c1;
        const double vhat = p.adam_v.data[i] / c2;
        p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// ============================================================================
// Computation tape
// ============================================================================

/// Handle to a tape node.
struct Value {
    int id = -1;
};

/// Reverse-mode tape over dense matrices. Operations compute eagerly and
/// append one record each; backward() walks the records in reverse. With
/// recording disabled the same forward values are produced (identical code
/// path) but backward bookkeeping (dropout masks, argmax indices) is not
/// retained and backward() is unavailable.
class Tape {
    enum class Op {
        leaf,
        matmul,
        spmm,
        add,
        hadamard,
        sum_all,
        relu,
        sigmoid,
        dropout,
        concat_cols,
        neighbor_max,
        softmax_xent,
        sigmoid_bce,
    };

    struct Node {
        Op op = Op::leaf;
        int a = -1;
        int b = -1;
        DenseMatrix value;
        Parameter* param = nullptr;           // leaf binding, may be null
        const SparseMatrix* sp = nullptr;     // spmm: operator
        const SparseMatrix* sp_t = nullptr;   // spmm: its transpose
        const Graph* graph = nullptr;         // neighbor_max
        DenseMatrix aux;                      // dropout mask / loss targets
        std::vector<int> argmax;              // neighbor_max routing
        std::vector<std::uint8_t> row_mask;   // loss ops
        std::vector<double> class_weights;    // loss ops
    };

public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    const DenseMatrix& value(Value v) const { return node(v.id).value; }

    double scalar(Value v) const {
        const DenseMatrix& m = value(v);
        check_shape(m.rows == 1 && m.cols == 1, "scalar expects 1x1");
        return m(0, 0);
    }

    /// Constant leaf (inputs, fixed targets).
    Value input(DenseMatrix x) {
        Node n;
        n.value = std::move(x);
        return push(std::move(n));
    }

    /// Parameter leaf; backward accumulates into p.grad. Binding the same
    /// Parameter more than once is fine (shared weights), gradients sum.
    Value param(Parameter& p) {
        Node n;
        n.value = p.value;
        n.param = &p;
        return push(std::move(n));
    }

    Value matmul(Value a, Value b) {
        Node n;
        n.op = Op::matmul;
        n.a = a.id;
        n.b = b.id;
        n.value = fgcn::matmul(value(a), value(b));
        return push(std::move(n));
    }

    /// y = S x for a constant sparse operator. The caller supplies the
    /// transpose used by backward; pass the same matrix twice when S is
    /// symmetric. Both references must outlive the tape.
    Value spmm(const SparseMatrix& s, const SparseMatrix& s_transposed, Value x) {
        Node n;
        n.op = Op::spmm;
        n.a = x.id;
        n.sp = &s;
        n.sp_t = &s_transposed;
        n.value = fgcn::spmm(s, value(x));
        return push(std::move(n));
    }

    Value add(Value a, Value b) {
        Node n;
        n.op = Op::add;
        n.a = a.id;
        n.b = b.id;
        n.value = fgcn::add(value(a), value(b));
        return push(std::move(n));
    }

    /// Elementwise product of two same-shape values.
    Value hadamard(Value a, Value b) {
        Node n;
        n.op = Op::hadamard;
        n.a = a.id;
        n.b = b.id;
        check_shape(value(a).same_shape(value(b)), "hadamard");
        n.value = value(a);
        for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= value(b).data[i];
        return push(std::move(n));
    }

    /// Sum of all entries, as a 1x1 value.
    Value sum_all(Value x) {
        Node n;
        n.op = Op::sum_all;
        n.a = x.id;
        n.value = DenseMatrix(1, 1);
        for (double v : value(x).data) n.value.data[0] += v;
        return push(std::move(n));
    }

    /// max(x, 0); the subgradient at exactly 0 is 0.
    Value relu(Value x) {
        Node n;
        n.op = Op::relu;
        n.a = x.id;
        n.value = value(x);
        for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
        return push(std::move(n));
    }

    Value sigmoid(Value x) {
        Node n;
        n.op = Op::sigmoid;
        n.a = x.id;
        n.value = value(x);
        for (double& v : n.value.data) v = sigmoid_stable(v);
        return push(std::move(n));
    }

    /// Inverted dropout: keeps entries with probability 1-rate and scales
    /// them by 1/(1-rate), so eval needs no rescaling. With training=false
    /// or rate=0 this is the identity and consumes no randomness. The mask
    /// is drawn row-major and reused exactly in backward.
    Value dropout(Value x, double rate, bool training, Rng& rng) {
        if (rate < 0.0 || rate >= 1.0)
            throw std::invalid_argument("dropout rate must be in [0,1)");
        if (!training || rate == 0.0) return x;
        Node n;
        n.op = Op::dropout;
        n.a = x.id;
        const DenseMatrix& in = value(x);
        const double keep_scale = 1.0 / (1.0 - rate);
        DenseMatrix mask(in.rows, in.cols);
        for (double& m : mask.data) m = rng.uniform() < rate ? 0.0 : keep_scale;
        n.value = in;
        for (std::size_t i = 0; i < mask.data.size(); ++i) n.value.data[i] *= mask.data[i];
        if (recording_) n.aux = std::move(mask);
        return push(std::move(n));
    }

    /// [a | b] along columns.
    Value concat_cols(Value a, Value b) {
        const DenseMatrix& ma = value(a);
        const DenseMatrix& mb = value(b);
        check_shape(ma.rows == mb.rows, "concat_cols row count");
        Node n;
        n.op = Op::concat_cols;
        n.a = a.id;
        n.b = b.id;
        n.value = DenseMatrix(ma.rows, ma.cols + mb.cols);
        for (int i = 0; i < ma.rows; ++i) {
            for (int j = 0; j < ma.cols; ++j) n.value(i, j) = ma(i, j);
            for (int j = 0; j < mb.cols; ++j) n.value(i, ma.cols + j) = mb(i, j);
        }
        return push(std::move(n));
    }

    /// Per-feature max over each node's full neighborhood (the node itself
    /// is not included). Empty neighborhoods yield zero rows and receive no
    /// gradient. Ties route the gradient to the lowest neighbor id.
    Value neighbor_max(const Graph& g, Value x) {
        const DenseMatrix& in = value(x);
        check_shape(g.num_nodes == in.rows, "neighbor_max node count");
        Node n;
        n.op = Op::neighbor_max;
        n.a = x.id;
        n.graph = &g;
        n.value = DenseMatrix(in.rows, in.cols);
        std::vector<int> arg(static_cast<std::size_t>(in.rows) * in.cols, -1);
        for (int i = 0; i < g.num_nodes; ++i) {
            auto [b, e] = g.neighbors(i);
            if (b == e) continue;
            for (int f = 0; f < in.cols; ++f) {
                double best = in(*b, f);
                int best_j = *b;
                for (const int* p = b + 1; p != e; ++p) {
                    if (in(*p, f) > best) {
                        best = in(*p, f);
                        best_j = *p;
                    }
                }
                n.value(i, f) = best;
                arg[static_cast<std::size_t>(i) * in.cols + f] = best_j;
            }
        }
        if (recording_) n.argmax = std::move(arg);
        return push(std::move(n));
    }

    /// Mean over masked rows of class-weighted softmax cross-entropy.
    /// `targets` rows must sum to 1 on masked rows (one-hot labels); the
    /// per-row weight is the target-weighted sum of class weights, which
    /// for a one-hot row is the weight of its true class.
    Value softmax_xent(Value logits, const DenseMatrix& targets,
                       const std::vector<std::uint8_t>& row_mask,
                       const std::vector<double>& class_weights) {
        const DenseMatrix& z = value(logits);
        const int m = check_loss_inputs(z, targets, row_mask, class_weights);
        double loss = 0.0;
        for (int i = 0; i < z.rows; ++i) {
            if (!row_mask[i]) continue;
            double row_sum = 0.0;
            for (int l = 0; l < z.cols; ++l) row_sum += targets(i, l);
            if (std::abs(row_sum - 1.0) > 1e-9)
                throw std::invalid_argument("softmax_xent: masked target row must sum to 1");
            const double lse = log_sum_exp_row(z, i);
            for (int l = 0; l < z.cols; ++l) {
                const double y = targets(i, l);
                if (y != 0.0) loss -= class_weights[l] * y * (z(i, l) - lse);
            }
        }
        return push_loss(Op::softmax_xent, logits, targets, row_mask, class_weights, loss / m);
    }

    /// Mean over masked rows of class-weighted binary cross-entropy on
    /// logits, summed across labels within a row. Numerically stable at
    /// large |logit|.
    Value sigmoid_bce(Value logits, const DenseMatrix& targets,
                      const std::vector<std::uint8_t>& row_mask,
                      const std::vector<double>& class_weights) {
        const DenseMatrix& z = value(logits);
        const int m = check_loss_inputs(z, targets, row_mask, class_weights);
        double loss = 0.0;
        for (int i = 0; i < z.rows; ++i) {
            if (!row_mask[i]) continue;
            for (int l = 0; l < z.cols; ++l) {
                const double zz = z(i, l);
                const double t = targets(i, l);
                loss += class_weights[l] *
                        (std::max(zz, 0.0) - zz * t + std::log1p(std::exp(-std::abs(zz))));
            }
        }
        return push_loss(Op::sigmoid_bce, logits, targets, row_mask, class_weights, loss / m);
    }

    /// Reverse sweep from `root` (typically the 1x1 loss). Accumulates
    /// parameter gradients into Parameter::grad; callers zero those first.
    void backward(Value root) {
        if (!recording_) throw std::logic_error("backward() on a non-recording tape");
        if (root.id < 0 || root.id >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("backward: bad root");
        std::vector<DenseMatrix> grads(nodes_.size());
        std::vector<bool> has(nodes_.size(), false);
        grads[root.id] = DenseMatrix(node(root.id).value.rows, node(root.id).value.cols, 0.0);
        for (double& v : grads[root.id].data) v = 1.0;
        has[root.id] = true;

        auto bump = [&](int id, const DenseMatrix& g) {
            if (!has[id]) {
                grads[id] = g;
                has[id] = true;
            } else {
                axpy(grads[id], 1.0, g);
            }
        };

        for (int id = root.id; id >= 0; --id) {
            if (!has[id]) continue;
            Node& n = nodes_[id];
            const DenseMatrix& g = grads[id];
            switch (n.op) {
                case Op::leaf:
                    if (n.param) axpy(n.param->grad, 1.0, g);
                    break;
                case Op::matmul:
                    bump(n.a, matmul_nt(g, nodes_[n.b].value));
                    bump(n.b, matmul_tn(nodes_[n.a].value, g));
                    break;
                case Op::spmm:
                    bump(n.a, fgcn::spmm(*n.sp_t, g));
                    break;
                case Op::add:
                    bump(n.a, g);
                    bump(n.b, g);
                    break;
                case Op::hadamard: {
                    DenseMatrix ga = g;
                    DenseMatrix gb = g;
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                        ga.data[i] *= nodes_[n.b].value.data[i];
                        gb.data[i] *= nodes_[n.a].value.data[i];
                    }
                    bump(n.a, ga);
                    bump(n.b, gb);
                    break;
                }
                case Op::sum_all: {
                    DenseMatrix gx(nodes_[n.a].value.rows, nodes_[n.a].value.cols);
                    for (double& v : gx.data) v = g.data[0];
                    bump(n.a, gx);
                    break;
                }
                case Op::relu: {
                    DenseMatrix gx = g;
                    for (std::size_t i = 0; i < gx.data.size(); ++i)
                        if (n.value.data[i] <= 0.0) gx.data[i] = 0.0;
                    bump(n.a, gx);
                    break;
                }
                case Op::sigmoid: {
                    DenseMatrix gx = g;
                    for (std::size_t i = 0; i < gx.data.size(); ++i) {
                        const double y = n.value.data[i];
                        gx.data[i] *= y * (1.0 - y);
                    }
                    bump(n.a, gx);
                    break;
                }
                case Op::dropout: {
                    DenseMatrix gx = g;
                    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= n.aux.data[i];
                    bump(n.a, gx);
                    break;
                }
                case Op::concat_cols: {
                    const DenseMatrix& ma = nodes_[n.a].value;
                    const DenseMatrix& mb = nodes_[n.b].value;
                    DenseMatrix ga(ma.rows, ma.cols), gb(mb.rows, mb.cols);
                    for (int i = 0; i < ma.rows; ++i) {
                        for (int j = 0; j < ma.cols; ++j) ga(i, j) = g(i, j);
                        for (int j = 0; j < mb.cols; ++j) gb(i, j) = g(i, ma.cols + j);
                    }
                    bump(n.a, ga);
                    bump(n.b, gb);
                    break;
                }
                case Op::neighbor_max: {
                    const DenseMatrix& in = nodes_[n.a].value;
                    DenseMatrix gx(in.rows, in.cols);
                    for (int i = 0; i < in.rows; ++i)
                        for (int f = 0; f < in.cols; ++f) {
                            const int j = n.argmax[static_cast<std::size_t>(i) * in.cols + f];
                            if (j >= 0) gx(j, f) += g(i, f);
                        }
                    bump(n.a, gx);
                    break;
                }
                case Op::softmax_xent: {
                    const double s = g(0, 0) / static_cast<double>(count_mask(n.row_mask));
                    const DenseMatrix& z = nodes_[n.a].value;
                    DenseMatrix gx(z.rows, z.cols);
                    for (int i = 0; i < z.rows; ++i) {
                        if (!n.row_mask[i]) continue;
                        const double lse = log_sum_exp_row(z, i);
                        double wsum = 0.0;
                        for (int l = 0; l < z.cols; ++l)
                            wsum += n.class_weights[l] * n.aux(i, l);
                        for (int l = 0; l < z.cols; ++l) {
                            const double p = std::exp(z(i, l) - lse);
                            gx(i, l) = s * (wsum * p - n.class_weights[l] * n.aux(i, l));
                        }
                    }
                    bump(n.a, gx);
                    break;
                }
                case Op::sigmoid_bce: {
                    const double s = g(0, 0) / static_cast<double>(count_mask(n.row_mask));
                    const DenseMatrix& z = nodes_[n.a].value;
                    DenseMatrix gx(z.rows, z.cols);
                    for (int i = 0; i < z.rows; ++i) {
                        if (!n.row_mask[i]) continue;
                        for (int l = 0; l < z.cols; ++l)
                            gx(i, l) = s * n.class_weights[l] *
                                       (sigmoid_stable(z(i, l)) - n.aux(i, l));
                    }
                    bump(n.a, gx);
                    break;
                }
            }
        }
    }

private:
    static double sigmoid_stable(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    static double log_sum_exp_row(const DenseMatrix& z, int i) {
        double mx = z(i, 0);
        for (int l = 1; l < z.cols; ++l) mx = std::max(mx, z(i, l));
        double acc = 0.0;
        for (int l = 0; l < z.cols; ++l) acc += std::exp(z(i, l) - mx);
        return mx + std::log(acc);
    }

    static int count_mask(const std::vector<std::uint8_t>& mask) {
        int m = 0;
        for (std::uint8_t b : mask)
            if (b) ++m;
        return m;
    }

    int check_loss_inputs(const DenseMatrix& z, const DenseMatrix& targets,
                          const std::vector<std::uint8_t>& row_mask,
                          const std::vector<double>& class_weights) const {
        check_shape(z.same_shape(targets), "loss targets");
        if (static_cast<int>(row_mask.size()) != z.rows)
            throw std::invalid_argument("loss row mask length != rows");
        if (static_cast<int>(class_weights.size()) != z.cols)
            throw std::invalid_argument("loss class weight length != labels");
        const int m = count_mask(row_mask);
        if (m == 0) throw std::invalid_argument("loss: empty row mask");
        return m;
    }

    Value push_loss(Op op, Value logits, const DenseMatrix& targets,
                    const std::vector<std::uint8_t>& row_mask,
                    const std::vector<double>& class_weights, double loss) {
        Node n;
        n.op = op;
        n.a = logits.id;
        n.value = DenseMatrix(1, 1);
        n.value(0, 0) = loss;
        if (recording_) {
            n.aux = targets;
            n.row_mask = row_mask;
            n.class_weights = class_weights;
        }
        return push(std::move(n));
    }

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }

    Value push(Node&& n) {
        nodes_.push_back(std::move(n));
        return Value{static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<Node> nodes_;
    bool recording_;
};

// ============================================================================
// Gradient checking
// ============================================================================

struct GradCheckOptions {
    double eps = 1e-5;
    int max_coords = 128;          // per parameter; all coords if fewer
    std::uint64_t sample_seed = 1;
};

/// Compares the tape's analytic gradients against central finite
/// differences of `f`, which must rebuild the same forward pass on the
/// tape it is given and return the scalar loss node. `f` has to be
/// deterministic across calls (fix any dropout seed, or evaluate with
/// training off). Returns the maximum relative error over a sampled
/// subset of coordinates of each parameter.
inline double grad_check(const std::function<Value(Tape&)>& f,
                         const std::vector<Parameter*>& params,
                         const GradCheckOptions& opts = {}) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape t(true);
        Value loss = f(t);
        if (!std::isfinite(t.scalar(loss))) throw NumericalError("grad_check: non-finite loss");
        t.backward(loss);
    }
    std::vector<DenseMatrix> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    auto eval = [&]() {
        Tape t(false);
        const double v = t.scalar(f(t));
        if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite loss");
        return v;
    };

    Rng rng(opts.sample_seed);
    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        const std::size_t size = p.value.data.size();
        std::vector<std::size_t> coords(size);
        for (std::size_t i = 0; i < size; ++i) coords[i] = i;
        if (size > static_cast<std::size_t>(opts.max_coords)) {
            shuffle(coords, rng);
            coords.resize(opts.max_coords);
        }
        for (std::size_t c : coords) {
            const double saved = p.value.data[c];
            p.value.data[c] = saved + opts.eps;
            const double up = eval();
            p.value.data[c] = saved - opts.eps;
            const double down = eval();
            p.value.data[c] = saved;
            const double numeric = (up - down) / (2.0 * opts.eps);
            const double a = analytic[pi].data[c];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace fgcn
