#include "radssl/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace radssl::ad {

namespace {

Tape& tape_of(Var a) {
    if (a.tape() == nullptr) throw std::logic_error("autodiff: unbound variable");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape()) throw std::logic_error("autodiff: variables from different tapes");
    return tape_of(a);
}

void check_same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string("autodiff ") + op + ": shape mismatch");
}

}  // namespace

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, false, {}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, true, {}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (const auto& v : inputs) needs = needs || nodes_[static_cast<std::size_t>(v.id())].needs_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Matrix& delta) {
    auto& node = nodes_[static_cast<std::size_t>(v.id())];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0)
        node.grad = delta;
    else
        node.grad += delta;
}

const Matrix& Tape::grad(int id) const {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    return node.grad.size() == 0 ? empty_ : node.grad;
}

void Tape::backward(Var out) {
    if (out.rows() != 1 || out.cols() != 1) throw std::invalid_argument("autodiff: backward needs a scalar output");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    auto& root = nodes_[static_cast<std::size_t>(out.id())];
    if (!root.needs_grad) return;
    root.grad = Matrix::Ones(1, 1);
    for (auto i = static_cast<std::ptrdiff_t>(out.id()); i >= 0; --i) {
        auto& node = nodes_[static_cast<std::size_t>(i)];
        if (!node.backward || node.grad.size() == 0) continue;
        node.backward(*this, node.value, node.grad);
    }
}

Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    auto& t = tape_of(a, b);
    const Var in[] = {a, b};
    return t.record(a.value() + b.value(), in, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    auto& t = tape_of(a, b);
    const Var in[] = {a, b};
    return t.record(a.value() - b.value(), in, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(b, -g);
    });
}

Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    auto& t = tape_of(a, b);
    const Var in[] = {a, b};
    return t.record(a.value().cwiseProduct(b.value()), in, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g.cwiseProduct(b.value()));
        tp.accumulate(b, g.cwiseProduct(a.value()));
    });
}

Var scale(Var a, double s) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(a.value() * s, in, [a, s](Tape& tp, const Matrix&, const Matrix& g) { tp.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record((a.value().array() + s).matrix(), in,
                    [a](Tape& tp, const Matrix&, const Matrix& g) { tp.accumulate(a, g); });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("autodiff add_row: shape mismatch");
    auto& t = tape_of(a, row);
    const Var in[] = {a, row};
    Matrix out = a.value().rowwise() + row.value().row(0);
    return t.record(std::move(out), in, [a, row](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g);
        tp.accumulate(row, g.colwise().sum());
    });
}

Var relu(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(a.value().cwiseMax(0.0), in, [a](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
    });
}

Var exp(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(a.value().array().exp().matrix(), in, [a](Tape& tp, const Matrix& y, const Matrix& g) {
        tp.accumulate(a, g.cwiseProduct(y));
    });
}

Var log(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(a.value().array().log().matrix(), in, [a](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g.cwiseQuotient(a.value()));
    });
}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("autodiff matmul: inner dimensions differ");
    auto& t = tape_of(a, b);
    const Var in[] = {a, b};
    Matrix out = a.value() * b.value();
    return t.record(std::move(out), in, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
        if (tp.needs_grad(a)) tp.accumulate(a, g * b.value().transpose());
        if (tp.needs_grad(b)) tp.accumulate(b, a.value().transpose() * g);
    });
}

Var matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("autodiff matmul_nt: inner dimensions differ");
    auto& t = tape_of(a, b);
    const Var in[] = {a, b};
    Matrix out = a.value() * b.value().transpose();
    return t.record(std::move(out), in, [a, b](Tape& tp, const Matrix&, const Matrix& g) {
        if (tp.needs_grad(a)) tp.accumulate(a, g * b.value());
        if (tp.needs_grad(b)) tp.accumulate(b, g.transpose() * a.value());
    });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("autodiff slice_cols: out of range");
    auto& t = tape_of(a);
    const Var in[] = {a};
    Matrix out = a.value().middleCols(start, count);
    return t.record(std::move(out), in, [a, start, count](Tape& tp, const Matrix&, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        full.middleCols(start, count) = g;
        tp.accumulate(a, full);
    });
}

Var select_rows(Var a, std::span<const Eigen::Index> rows) {
    auto& t = tape_of(a);
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= a.rows()) throw std::invalid_argument("autodiff select_rows: out of range");
        out.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
    }
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, idx = std::move(idx)](Tape& tp, const Matrix&, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        tp.accumulate(a, full);
    });
}

Var hcat(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("autodiff hcat: no inputs");
    auto& t = tape_of(parts.front());
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts.front().rows()) throw std::invalid_argument("autodiff hcat: row mismatch");
        cols += p.cols();
    }
    Matrix out(parts.front().rows(), cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    std::vector<Var> keep(parts.begin(), parts.end());
    return t.record(std::move(out), parts, [keep = std::move(keep)](Tape& tp, const Matrix&, const Matrix& g) {
        Eigen::Index off = 0;
        for (const auto& p : keep) {
            if (tp.needs_grad(p)) tp.accumulate(p, g.middleCols(off, p.cols()));
            off += p.cols();
        }
    });
}

Var vcat(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("autodiff vcat: no inputs");
    auto& t = tape_of(parts.front());
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != parts.front().cols()) throw std::invalid_argument("autodiff vcat: column mismatch");
        rows += p.rows();
    }
    Matrix out(rows, parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    std::vector<Var> keep(parts.begin(), parts.end());
    return t.record(std::move(out), parts, [keep = std::move(keep)](Tape& tp, const Matrix&, const Matrix& g) {
        Eigen::Index off = 0;
        for (const auto& p : keep) {
            if (tp.needs_grad(p)) tp.accumulate(p, g.middleRows(off, p.rows()));
            off += p.rows();
        }
    });
}

Var softmax_rows(Var a) {
    auto& t = tape_of(a);
    Matrix y = a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double mx = y.row(r).maxCoeff();
        y.row(r) = (y.row(r).array() - mx).exp().matrix();
        y.row(r) /= y.row(r).sum();
    }
    const Var in[] = {a};
    return t.record(std::move(y), in, [a](Tape& tp, const Matrix& y, const Matrix& g) {
        const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
        tp.accumulate(a, y.cwiseProduct(g - dots.replicate(1, g.cols())));
    });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
    const auto n = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n)
        throw std::invalid_argument("autodiff layer_norm_rows: parameter shape mismatch");
    auto& t = tape_of(x, gamma);
    const Matrix& xv = x.value();
    Matrix xhat(xv.rows(), n);
    Eigen::VectorXd inv_sd(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        inv_sd(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mu) * inv_sd(r);
    }
    Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
    const Var in[] = {x, gamma, beta};
    return t.record(std::move(out), in,
                    [x, gamma, beta, xhat = std::move(xhat), inv_sd = std::move(inv_sd)](Tape& tp, const Matrix&,
                                                                                        const Matrix& g) {
                        if (tp.needs_grad(beta)) tp.accumulate(beta, g.colwise().sum());
                        if (tp.needs_grad(gamma)) tp.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                        if (!tp.needs_grad(x)) return;
                        const Matrix dxhat = g.array().rowwise() * gamma.value().row(0).array();
                        Matrix dx(dxhat.rows(), dxhat.cols());
                        for (Eigen::Index r = 0; r < dx.rows(); ++r) {
                            const double m1 = dxhat.row(r).mean();
                            const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                            dx.row(r) = inv_sd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                        }
                        tp.accumulate(x, dx);
                    });
}

Var mean_rows(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    Matrix out = a.value().colwise().mean();
    return t.record(std::move(out), in, [a](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, g.replicate(a.rows(), 1) / static_cast<double>(a.rows()));
    });
}

Var sum(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(Matrix::Constant(1, 1, a.value().sum()), in, [a](Tape& tp, const Matrix&, const Matrix& g) {
        tp.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Var sum_squares(Var a) {
    auto& t = tape_of(a);
    const Var in[] = {a};
    return t.record(Matrix::Constant(1, 1, a.value().squaredNorm()), in,
                    [a](Tape& tp, const Matrix&, const Matrix& g) { tp.accumulate(a, 2.0 * g(0, 0) * a.value()); });
}

Var flatten(Var a) {
    auto& t = tape_of(a);
    const auto r = a.rows();
    const auto c = a.cols();
    Matrix out(1, r * c);
    for (Eigen::Index i = 0; i < r; ++i) out.block(0, i * c, 1, c) = a.value().row(i);
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, r, c](Tape& tp, const Matrix&, const Matrix& g) {
        Matrix back(r, c);
        for (Eigen::Index i = 0; i < r; ++i) back.row(i) = g.block(0, i * c, 1, c);
        tp.accumulate(a, back);
    });
}

Var l2_normalize(Var a, double eps) {
    const Var flat = flatten(a);
    auto& t = tape_of(flat);
    const double norm = flat.value().norm();
    const double denom = std::max(norm, eps);
    const Var in[] = {flat};
    return t.record(flat.value() / denom, in, [flat, norm, denom, eps](Tape& tp, const Matrix& y, const Matrix& g) {
        if (norm > eps)
            tp.accumulate(flat, (g - y * (y.cwiseProduct(g).sum())) / denom);
        else
            tp.accumulate(flat, g / denom);
    });
}

Var log_softmax_all(Var a) {
    auto& t = tape_of(a);
    const double mx = a.value().maxCoeff();
    const double lse = mx + std::log((a.value().array() - mx).exp().sum());
    const Var in[] = {a};
    return t.record((a.value().array() - lse).matrix(), in, [a](Tape& tp, const Matrix& y, const Matrix& g) {
        tp.accumulate(a, g - y.array().exp().matrix() * g.sum());
    });
}

}  // namespace radssl::ad
