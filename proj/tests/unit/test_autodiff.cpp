#include "oracles.hpp"

#include "radssl/autodiff.hpp"

#include <doctest.h>

using namespace radssl;

namespace {

using UnaryOp = std::function<ad::Var(ad::Var)>;

// Gradient of sum(op(x) .* W) for a fixed random weight W, against central differences.
oracle::GradCheck check_op(const UnaryOp& op, const Matrix& x0, std::uint64_t seed = 1) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    Matrix w;
    auto eval = [&](const Matrix& x, Matrix* grad) {
        ad::Tape tape;
        const auto xv = tape.variable(x);
        const auto y = op(xv);
        if (w.size() == 0) w = Matrix::NullaryExpr(y.rows(), y.cols(), [&] { return normal(rng); });
        const auto out = ad::sum(ad::mul(y, tape.constant(w)));
        if (grad) {
            tape.backward(out);
            *grad = xv.grad();
        }
        return out.scalar();
    };
    Matrix g;
    eval(x0, &g);
    const Eigen::Index r = x0.rows();
    const Eigen::Index c = x0.cols();
    auto f = [&](const Vector& p) { return eval(Eigen::Map<const Matrix>(p.data(), r, c), nullptr); };
    const Vector x = Eigen::Map<const Vector>(x0.data(), x0.size());
    const Vector analytic = Eigen::Map<const Vector>(g.data(), g.size());
    return oracle::compare_gradient(f, x, analytic, 1e-6, 1e-6);
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double offset = 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    return Matrix::NullaryExpr(r, c, [&] { return normal(rng) + offset; });
}

}  // namespace

TEST_CASE("elementwise and structural ops") {
    const Matrix x = random_matrix(3, 4, 2);
    const Matrix positive = random_matrix(3, 4, 3, 4.0).cwiseAbs();
    const Matrix other = random_matrix(3, 4, 4);
    const Matrix row = random_matrix(1, 4, 5);
    const std::vector<Eigen::Index> rows{2, 0, 2};

    const std::vector<std::pair<const char*, UnaryOp>> ops{
        {"add", [&](ad::Var a) { return ad::add(a, a.tape()->constant(other)); }},
        {"sub", [&](ad::Var a) { return ad::sub(a.tape()->constant(other), a); }},
        {"mul self", [](ad::Var a) { return ad::mul(a, a); }},
        {"scale", [](ad::Var a) { return ad::scale(a, -2.5); }},
        {"add_scalar", [](ad::Var a) { return ad::add_scalar(a, 1.5); }},
        {"add_row", [&](ad::Var a) { return ad::add_row(a, a.tape()->constant(row)); }},
        {"exp", [](ad::Var a) { return ad::exp(a); }},
        {"slice_cols", [](ad::Var a) { return ad::slice_cols(a, 1, 2); }},
        {"select_rows", [&](ad::Var a) { return ad::select_rows(a, rows); }},
        {"hcat", [](ad::Var a) {
             const std::vector<ad::Var> parts{a, ad::scale(a, 2.0)};
             return ad::hcat(parts);
         }},
        {"vcat", [](ad::Var a) {
             const std::vector<ad::Var> parts{ad::exp(a), a};
             return ad::vcat(parts);
         }},
        {"softmax_rows", [](ad::Var a) { return ad::softmax_rows(a); }},
        {"mean_rows", [](ad::Var a) { return ad::mean_rows(a); }},
        {"sum", [](ad::Var a) { return ad::sum(a); }},
        {"sum_squares", [](ad::Var a) { return ad::sum_squares(a); }},
        {"flatten", [](ad::Var a) { return ad::flatten(a); }},
        {"l2_normalize", [](ad::Var a) { return ad::l2_normalize(a); }},
        {"log_softmax_all", [](ad::Var a) { return ad::log_softmax_all(a); }},
    };
    for (const auto& [name, op] : ops) {
        const auto r = check_op(op, x);
        INFO(name << ": " << r.worst);
        CHECK(r.max_relative_error <= 1e-6);
    }
    const auto lg = check_op([](ad::Var a) { return ad::log(a); }, positive);
    CHECK(lg.max_relative_error <= 1e-6);
}

TEST_CASE("relu away from the kink") {
    Matrix x = random_matrix(4, 3, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x(i)) < 0.1) x(i) = 0.5;
    const auto r = check_op([](ad::Var a) { return ad::relu(a); }, x);
    CHECK(r.max_relative_error <= 1e-6);
}

TEST_CASE("matrix products") {
    const Matrix x = random_matrix(3, 4, 7);
    const Matrix b = random_matrix(4, 2, 8);
    const Matrix c = random_matrix(5, 4, 9);
    CHECK(check_op([&](ad::Var a) { return ad::matmul(a, a.tape()->constant(b)); }, x).max_relative_error <= 1e-6);
    CHECK(check_op([&](ad::Var a) { return ad::matmul(a.tape()->constant(c), a); }, x.transpose())
              .max_relative_error <= 1e-6);
    CHECK(check_op([&](ad::Var a) { return ad::matmul_nt(a, a.tape()->constant(c)); }, x).max_relative_error <= 1e-6);
    CHECK(check_op([](ad::Var a) { return ad::matmul_nt(a, a); }, x).max_relative_error <= 1e-6);
}

TEST_CASE("layer norm with its affine parameters") {
    const Matrix x = random_matrix(3, 5, 10);
    const Matrix gamma = random_matrix(1, 5, 11, 1.0);
    const Matrix beta = random_matrix(1, 5, 12);
    auto norm = [&](ad::Var a) { return ad::layer_norm_rows(a, a.tape()->constant(gamma), a.tape()->constant(beta)); };
    CHECK(check_op(norm, x).max_relative_error <= 1e-6);
    auto wrt_gamma = [&](ad::Var g) { return ad::layer_norm_rows(g.tape()->constant(x), g, g.tape()->constant(beta)); };
    CHECK(check_op(wrt_gamma, gamma).max_relative_error <= 1e-6);

    ad::Tape tape;
    const auto y = ad::layer_norm_rows(tape.constant(x), tape.constant(Matrix::Ones(1, 5)), tape.constant(Matrix::Zero(1, 5)));
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(std::abs(y.value().row(i).mean()) <= 1e-12);
        CHECK(y.value().row(i).squaredNorm() / 5.0 == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("tape bookkeeping") {
    ad::Tape tape;
    const auto c = tape.constant(Matrix::Ones(2, 2));
    const auto v = tape.variable(Matrix::Constant(2, 2, 3.0));
    CHECK_FALSE(tape.needs_grad(c));
    CHECK(tape.needs_grad(v));
    const auto out = ad::sum(ad::mul(v, v));
    CHECK(out.scalar() == 36.0);
    tape.backward(out);
    CHECK(v.grad().isApprox(Matrix::Constant(2, 2, 6.0)));
    CHECK_THROWS(tape.backward(v));
}
