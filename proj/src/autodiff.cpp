#include "ddcrnn/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace ddcrnn::ad {

namespace detail {

enum class Op {
    kLeaf,
    kConstant,
    kMatmul,
    kAdd,
    kAddRowBroadcast,
    kAddScalarBroadcast,
    kSub,
    kHadamard,
    kSigmoid,
    kTanh,
    kAbs,
    kConcatCols,
    kSliceCols,
    kScale,
    kMeanAll,
};

struct Node {
    Op op = Op::kConstant;
    Matrix value;
    Matrix grad;  // empty until touched by backward
    std::vector<std::shared_ptr<Node>> parents;
    bool requires_grad = false;
    // Per-op extras: scale factor for kScale, first column for kSliceCols.
    double aux = 0.0;
    int aux_int = 0;

    void accumulate(const Matrix& g) {
        if (grad.empty()) grad = Matrix(value.rows(), value.cols());
        add_inplace(grad, g);
    }
};

}  // namespace detail

using detail::Node;
using detail::Op;

namespace detail {
const std::shared_ptr<Node>& node_of(const Tensor& t) {
    if (!t.node_) throw ValidationError("tensor is empty");
    return t.node_;
}
}  // namespace detail

Tensor wrap_node(std::shared_ptr<Node> n) { return wrap_node(std::move(n)); }

namespace {

const std::shared_ptr<Node>& unwrap(const Tensor& t) { return detail::node_of(t); }

std::shared_ptr<Node> make_node(Op op, Matrix value, std::vector<std::shared_ptr<Node>> parents) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool needs = false;
    for (const auto& p : parents)
        if (p->requires_grad) needs = true;
    if (needs) {
        // Provenance recorded only when a grad will flow through.
        n->op = op;
        n->parents = std::move(parents);
        n->requires_grad = true;
    } else {
        n->op = Op::kConstant;
    }
    return n;
}

}  // namespace

const Matrix& Tensor::value() const {
    if (!node_) throw ValidationError("tensor is empty");
    return node_->value;
}

Matrix Tensor::grad() const {
    if (!node_) throw ValidationError("tensor is empty");
    if (node_->grad.empty()) return Matrix(node_->value.rows(), node_->value.cols());
    return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor constant(Matrix v) {
    auto n = std::make_shared<Node>();
    n->op = Op::kConstant;
    n->value = std::move(v);
    return wrap_node(std::move(n));
}

Tensor leaf(Matrix v) {
    auto n = std::make_shared<Node>();
    n->op = Op::kLeaf;
    n->value = std::move(v);
    n->requires_grad = true;
    return wrap_node(std::move(n));
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto& na = unwrap(a);
    const auto& nb = unwrap(b);
    return wrap_node(make_node(Op::kMatmul, ddcrnn::matmul(na->value, nb->value), {na, nb}));
}

Tensor add(const Tensor& a, const Tensor& b) {
    const auto& na = unwrap(a);
    const auto& nb = unwrap(b);
    const Matrix& va = na->value;
    const Matrix& vb = nb->value;
    if (va.same_shape(vb)) {
        Matrix out = va;
        add_inplace(out, vb);
        return wrap_node(make_node(Op::kAdd, std::move(out), {na, nb}));
    }
    if (vb.rows() == 1 && vb.cols() == 1) {
        Matrix out = va;
        const double s = vb(0, 0);
        for (size_t i = 0; i < out.size(); ++i) out.data()[i] += s;
        return wrap_node(make_node(Op::kAddScalarBroadcast, std::move(out), {na, nb}));
    }
    if (vb.rows() == 1 && vb.cols() == va.cols()) {
        Matrix out = va;
        for (int r = 0; r < out.rows(); ++r)
            for (int c = 0; c < out.cols(); ++c) out(r, c) += vb(0, c);
        return wrap_node(make_node(Op::kAddRowBroadcast, std::move(out), {na, nb}));
    }
    throw ValidationError("add: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const auto& na = unwrap(a);
    const auto& nb = unwrap(b);
    require_same_shape(na->value, nb->value, "sub");
    Matrix out = na->value;
    axpy_inplace(out, -1.0, nb->value);
    return wrap_node(make_node(Op::kSub, std::move(out), {na, nb}));
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    const auto& na = unwrap(a);
    const auto& nb = unwrap(b);
    require_same_shape(na->value, nb->value, "hadamard");
    Matrix out = na->value;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= nb->value.data()[i];
    return wrap_node(make_node(Op::kHadamard, std::move(out), {na, nb}));
}

Tensor sigmoid(const Tensor& x) {
    const auto& nx = unwrap(x);
    Matrix out = nx->value;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = sigmoid_scalar(out.data()[i]);
    return wrap_node(make_node(Op::kSigmoid, std::move(out), {nx}));
}

Tensor tanh(const Tensor& x) {
    const auto& nx = unwrap(x);
    Matrix out = nx->value;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
    return wrap_node(make_node(Op::kTanh, std::move(out), {nx}));
}

Tensor abs(const Tensor& x) {
    const auto& nx = unwrap(x);
    Matrix out = nx->value;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::fabs(out.data()[i]);
    return wrap_node(make_node(Op::kAbs, std::move(out), {nx}));
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ValidationError("concat_cols: no inputs");
    std::vector<std::shared_ptr<Node>> nodes;
    nodes.reserve(parts.size());
    int total_cols = 0;
    const int rows = unwrap(parts[0])->value.rows();
    for (const Tensor& t : parts) {
        const auto& n = unwrap(t);
        if (n->value.rows() != rows) {
            throw ValidationError("concat_cols: row mismatch " +
                                  std::to_string(rows) + " vs " + n->value.shape_str());
        }
        total_cols += n->value.cols();
        nodes.push_back(n);
    }
    Matrix out(rows, total_cols);
    int at = 0;
    for (const auto& n : nodes) {
        const Matrix& v = n->value;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < v.cols(); ++c) out(r, at + c) = v(r, c);
        at += v.cols();
    }
    return wrap_node(make_node(Op::kConcatCols, std::move(out), std::move(nodes)));
}

Tensor slice_cols(const Tensor& x, int first, int count) {
    const auto& nx = unwrap(x);
    const Matrix& v = nx->value;
    if (first < 0 || count < 0 || first + count > v.cols()) {
        throw ValidationError("slice_cols: [" + std::to_string(first) + ", " +
                              std::to_string(first + count) + ") out of range for " + v.shape_str());
    }
    Matrix out(v.rows(), count);
    for (int r = 0; r < v.rows(); ++r)
        for (int c = 0; c < count; ++c) out(r, c) = v(r, first + c);
    auto n = make_node(Op::kSliceCols, std::move(out), {nx});
    n->aux_int = first;
    return wrap_node(std::move(n));
}

Tensor scale(const Tensor& x, double s) {
    const auto& nx = unwrap(x);
    Matrix out = nx->value;
    scale_inplace(out, s);
    auto n = make_node(Op::kScale, std::move(out), {nx});
    n->aux = s;
    return wrap_node(std::move(n));
}

Tensor mean_all(const Tensor& x) {
    const auto& nx = unwrap(x);
    const Matrix& v = nx->value;
    if (v.size() == 0) throw ValidationError("mean_all: empty tensor");
    double acc = 0.0;
    for (size_t i = 0; i < v.size(); ++i) acc += v.data()[i];
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<double>(v.size());
    return wrap_node(make_node(Op::kMeanAll, std::move(out), {nx}));
}

namespace {

void backward_node(Node* n) {
    const Matrix& g = n->grad;
    switch (n->op) {
        case Op::kLeaf:
        case Op::kConstant:
            return;
        case Op::kMatmul: {
            Node* a = n->parents[0].get();
            Node* b = n->parents[1].get();
            if (a->requires_grad) a->accumulate(matmul_nt(g, b->value));
            if (b->requires_grad) b->accumulate(matmul_tn(a->value, g));
            return;
        }
        case Op::kAdd: {
            for (auto& p : n->parents)
                if (p->requires_grad) p->accumulate(g);
            return;
        }
        case Op::kAddScalarBroadcast: {
            Node* a = n->parents[0].get();
            Node* b = n->parents[1].get();
            if (a->requires_grad) a->accumulate(g);
            if (b->requires_grad) {
                Matrix gb(1, 1);
                for (size_t i = 0; i < g.size(); ++i) gb(0, 0) += g.data()[i];
                b->accumulate(gb);
            }
            return;
        }
        case Op::kAddRowBroadcast: {
            Node* a = n->parents[0].get();
            Node* b = n->parents[1].get();
            if (a->requires_grad) a->accumulate(g);
            if (b->requires_grad) {
                Matrix gb(1, g.cols());
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                b->accumulate(gb);
            }
            return;
        }
        case Op::kSub: {
            Node* a = n->parents[0].get();
            Node* b = n->parents[1].get();
            if (a->requires_grad) a->accumulate(g);
            if (b->requires_grad) {
                Matrix gb = g;
                scale_inplace(gb, -1.0);
                b->accumulate(gb);
            }
            return;
        }
        case Op::kHadamard: {
            Node* a = n->parents[0].get();
            Node* b = n->parents[1].get();
            if (a->requires_grad) {
                Matrix ga = g;
                for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= b->value.data()[i];
                a->accumulate(ga);
            }
            if (b->requires_grad) {
                Matrix gb = g;
                for (size_t i = 0; i < gb.size(); ++i) gb.data()[i] *= a->value.data()[i];
                b->accumulate(gb);
            }
            return;
        }
        case Op::kSigmoid: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            Matrix ga = g;
            const double* y = n->value.data();
            for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= y[i] * (1.0 - y[i]);
            a->accumulate(ga);
            return;
        }
        case Op::kTanh: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            Matrix ga = g;
            const double* y = n->value.data();
            for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= 1.0 - y[i] * y[i];
            a->accumulate(ga);
            return;
        }
        case Op::kAbs: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            Matrix ga = g;
            const double* x = a->value.data();
            for (size_t i = 0; i < ga.size(); ++i) {
                // Subgradient 0 at the kink.
                ga.data()[i] *= (x[i] > 0.0) ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
            }
            a->accumulate(ga);
            return;
        }
        case Op::kConcatCols: {
            int at = 0;
            for (auto& p : n->parents) {
                const int w = p->value.cols();
                if (p->requires_grad) {
                    Matrix gp(p->value.rows(), w);
                    for (int r = 0; r < gp.rows(); ++r)
                        for (int c = 0; c < w; ++c) gp(r, c) = g(r, at + c);
                    p->accumulate(gp);
                }
                at += w;
            }
            return;
        }
        case Op::kSliceCols: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            Matrix ga(a->value.rows(), a->value.cols());
            for (int r = 0; r < g.rows(); ++r)
                for (int c = 0; c < g.cols(); ++c) ga(r, n->aux_int + c) = g(r, c);
            a->accumulate(ga);
            return;
        }
        case Op::kScale: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            Matrix ga = g;
            scale_inplace(ga, n->aux);
            a->accumulate(ga);
            return;
        }
        case Op::kMeanAll: {
            Node* a = n->parents[0].get();
            if (!a->requires_grad) return;
            const double w = g(0, 0) / static_cast<double>(a->value.size());
            Matrix ga(a->value.rows(), a->value.cols(), w);
            a->accumulate(ga);
            return;
        }
    }
}

}  // namespace

void backward(const Tensor& loss) {
    const auto& root = unwrap(loss);
    if (root->value.rows() != 1 || root->value.cols() != 1) {
        throw ValidationError("backward: loss must be 1x1, got " + root->value.shape_str());
    }
    if (!root->requires_grad) {
        throw ValidationError("backward: tensor is detached (no grad-requiring inputs)");
    }

    // Iterative post-order DFS -> topological order; reverse visit applies
    // each node's vjp exactly once.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad = Matrix(1, 1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) backward_node(*it);
}

}  // namespace ddcrnn::ad
