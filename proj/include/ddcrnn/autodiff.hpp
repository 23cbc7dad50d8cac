#pragma once

#include <memory>
#include <span>
#include <vector>

#include "ddcrnn/matrix.hpp"

namespace ddcrnn::ad {

// Reverse-mode engine over dense matrices. Define-by-run: every op appends a
// node to an implicit tape formed by parent links; backward() walks the graph
// in reverse topological order once. A tape is confined to one thread; run
// one tape per minibatch sample to parallelize.
//
// Op set: matmul, add (with 1xC / 1x1 broadcast on the right), sub, hadamard,
// sigmoid, tanh, abs, concat_cols, slice_cols, scale, mean_all. abs exists
// for the MAE loss; everything else realizes the gate and diffusion algebra.

namespace detail {
struct Node;
}

class Tensor;

namespace detail {
const std::shared_ptr<Node>& node_of(const Tensor& t);
}

class Tensor {
public:
    Tensor() = default;

    const Matrix& value() const;
    // Gradient accumulated by the last backward() over this node's graph.
    // Zero matrix if the node was never reached.
    Matrix grad() const;

    int rows() const { return value().rows(); }
    int cols() const { return value().cols(); }
    bool requires_grad() const;
    bool defined() const { return node_ != nullptr; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;

    friend const std::shared_ptr<detail::Node>& detail::node_of(const Tensor& t);
    friend Tensor constant(Matrix v);
    friend Tensor leaf(Matrix v);
    friend Tensor wrap_node(std::shared_ptr<detail::Node> n);
};

Tensor constant(Matrix v);  // requires_grad = false
Tensor leaf(Matrix v);      // requires_grad = true

Tensor matmul(const Tensor& a, const Tensor& b);
// add: shapes must match, or b may be 1xC (row broadcast) or 1x1 (scalar).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor concat_cols(std::span<const Tensor> parts);
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    const Tensor parts[2] = {a, b};
    return concat_cols(std::span<const Tensor>(parts, 2));
}
Tensor slice_cols(const Tensor& x, int first, int count);
Tensor scale(const Tensor& x, double s);
Tensor mean_all(const Tensor& x);  // 1x1

// Accumulates grads into every requires_grad node reachable from loss.
// loss must be 1x1 and attached to a tape.
void backward(const Tensor& loss);

// Numerically safe scalar sigmoid (no overflow for large |x|).
double sigmoid_scalar(double x);

}  // namespace ddcrnn::ad
