#pragma once

// Matrix-valued reverse-mode automatic differentiation.
//
// A Tape records every operation as a node holding its value and a closure
// that pushes the node's adjoint back into its inputs. Nodes are only ever
// appended, so a node id is a stable handle. Tapes are cheap to build and
// meant to live for a single forward/backward pass.

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace radssl::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

class Var {
public:
    Var() = default;

    [[nodiscard]] const Matrix& value() const;
    [[nodiscard]] const Matrix& grad() const;
    [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
    [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
    [[nodiscard]] double scalar() const { return value()(0, 0); }
    [[nodiscard]] Tape* tape() const { return tape_; }
    [[nodiscard]] int id() const { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    // Receives the node's own value and its accumulated adjoint.
    using Backward = std::function<void(Tape&, const Matrix& value, const Matrix& adjoint)>;

    Var constant(Matrix value);
    Var variable(Matrix value);  // leaf that accumulates a gradient

    // Seeds d(out)/d(out) = 1 for a 1x1 node and runs the reverse sweep.
    void backward(Var out);

    [[nodiscard]] const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    [[nodiscard]] const Matrix& grad(int id) const;
    [[nodiscard]] bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].needs_grad; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    // Records a node computed from `inputs`. `backward` is only kept when at
    // least one input needs a gradient.
    Var record(Matrix value, std::span<const Var> inputs, Backward backward);

    // Adds `delta` into the adjoint of `v` if `v` participates in differentiation.
    void accumulate(Var v, const Matrix& delta);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
    Matrix empty_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }

// Shape-preserving arithmetic.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
Var relu(Var a);
Var exp(Var a);
Var log(Var a);

// Linear algebra.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var select_rows(Var a, std::span<const Eigen::Index> rows);
Var hcat(std::span<const Var> parts);
Var vcat(std::span<const Var> parts);

// Row-wise operations.
Var softmax_rows(Var a);
Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
Var mean_rows(Var a);  // column means as a 1 x c row

// Whole-matrix reductions and reshapes.
Var sum(Var a);            // 1 x 1
Var sum_squares(Var a);    // 1 x 1
Var flatten(Var a);        // row-major order, 1 x (r*c)
Var l2_normalize(Var a, double eps = 1e-12);  // flatten, then divide by max(||a||, eps)
Var log_softmax_all(Var a);  // log of the normalized exponential over every entry

}  // namespace radssl::ad
