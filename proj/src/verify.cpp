#include "radssl/verify.hpp"

#include "radssl/bregman.hpp"
#include "radssl/losses.hpp"
#include "radssl/text.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace radssl {

namespace {

using bregman::divergence;
using bregman::random_simplex;

Vector gaussian(int dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
    return v;
}

CheckResult deviation_check(std::string name, double deviation, double tolerance) {
    return {std::move(name), deviation <= tolerance, deviation, tolerance};
}

ViewEmbedding unit_embedding(const Vector& v) {
    ViewEmbedding e;
    e.per_roi = v.transpose();
    e.flat_normalized = v.normalized().transpose();
    return e;
}

}  // namespace

std::vector<CheckResult> run_verify_suite(std::uint64_t seed, int trials) {
    Rng rng(seed);
    std::vector<CheckResult> out;
    const auto sq = bregman::squared_norm();
    const auto ent = bregman::negative_entropy();

    const auto r7 = bregman::verify_squared_norm_identity(trials, rng);
    out.push_back(deviation_check(r7.name, r7.max_deviation, r7.tolerance));
    const auto r8 = bregman::verify_entropy_identity(trials, rng);
    out.push_back(deviation_check(r8.name, r8.max_deviation, r8.tolerance));

    {
        double worst_neg = 0.0;
        double worst_self = 0.0;
        for (int t = 0; t < trials; ++t) {
            const Vector a = gaussian(20, rng);
            const Vector b = gaussian(20, rng);
            const Vector p = random_simplex(20, rng);
            const Vector q = random_simplex(20, rng);
            worst_neg = std::max({worst_neg, -divergence(sq, a, b), -divergence(ent, p, q)});
            worst_self = std::max({worst_self, std::abs(divergence(sq, a, a)), std::abs(divergence(ent, p, p))});
        }
        out.push_back(deviation_check("divergence is non-negative", std::max(worst_neg, 0.0), 1e-12));
        out.push_back(deviation_check("divergence vanishes at p = q", worst_self, 1e-12));
    }

    {
        const auto mixed = bregman::combine(0.7, sq, 1.9, ent);
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            const Vector p = random_simplex(30, rng);
            const Vector q = random_simplex(30, rng);
            const double lhs = divergence(mixed, p, q);
            const double rhs = 0.7 * divergence(sq, p, q) + 1.9 * divergence(ent, p, q);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        out.push_back(deviation_check("divergence is linear in the generator", worst, 1e-10));
    }

    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            const Vector p1 = random_simplex(25, rng);
            const Vector p2 = random_simplex(25, rng);
            const Vector q = random_simplex(25, rng);
            const double s = unit(rng);
            for (const auto* g : {&sq, &ent}) {
                const Vector mid = s * p1 + (1.0 - s) * p2;
                const double excess =
                    divergence(*g, mid, q) - (s * divergence(*g, p1, q) + (1.0 - s) * divergence(*g, p2, q));
                worst = std::max(worst, excess);
            }
        }
        out.push_back(deviation_check("divergence is convex in its first argument", std::max(worst, 0.0), 1e-9));
    }

    {
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            const Vector p = gaussian(15, rng);
            const Vector q = gaussian(15, rng);
            const Vector u = gaussian(15, rng).normalized();
            const Vector r = q + u.dot(p - q) * u;
            worst = std::max(worst, std::abs(divergence(sq, p, q) - divergence(sq, p, r) - divergence(sq, r, q)));
        }
        out.push_back(deviation_check("squared-norm Pythagorean identity", worst, 1e-10));
    }

    {
        double worst = 0.0;
        const double h = 1e-6;
        for (int t = 0; t < 100; ++t) {
            const Vector p = random_simplex(10, rng);
            for (const auto* g : {&sq, &ent}) {
                const Vector grad = g->grad_psi(p);
                for (int i = 0; i < p.size(); ++i) {
                    Vector hi = p;
                    Vector lo = p;
                    hi(i) += h * p(i);
                    lo(i) -= h * p(i);
                    const double fd = (g->psi(hi) - g->psi(lo)) / (2.0 * h * p(i));
                    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1.0, std::abs(grad(i))));
                }
            }
        }
        out.push_back(deviation_check("generator gradient matches finite differences", worst, 1e-6));
    }

    {
        double upper = 0.0;
        double lower = 0.0;
        double asym = 0.0;
        for (int t = 0; t < trials; ++t) {
            const ProbVector p(random_simplex(40, rng));
            const ProbVector q(random_simplex(40, rng));
            const double js = js_div(p, q);
            upper = std::max(upper, js - std::numbers::ln2);
            lower = std::max(lower, -js);
            asym = std::max(asym, std::abs(js - js_div(q, p)));
        }
        out.push_back(deviation_check("JS divergence stays within [0, ln 2]", std::max({upper, lower, 0.0}), 0.0));
        out.push_back(deviation_check("JS divergence is symmetric", asym, 0.0));
    }

    {
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            const ProbVector p(random_simplex(40, rng));
            const ProbVector q(random_simplex(40, rng));
            worst = std::max({worst, -kl_div(p, q), std::abs(kl_div(p, p))});
        }
        out.push_back(deviation_check("KL is non-negative and zero at p = q", std::max(worst, 0.0), 1e-12));
        const double kl = kl_div(ProbVector(Vector{{0.5, 0.5}}), ProbVector(Vector{{0.25, 0.75}}));
        out.push_back(deviation_check("KL((0.5, 0.5) || (0.25, 0.75))",
                                      std::abs(kl - (0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0))), 1e-12));
    }

    {
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Matrix x = Matrix::NullaryExpr(3, 4, [&] { return gaussian(1, rng)(0); });
            std::vector<Matrix> recons{x, x};
            worst = std::max(worst, std::abs(recon_loss(x, recons, 1.0)));
            recons[1] = x.array() + 1.0;
            worst = std::max(worst, -recon_loss(x, recons, 0.3));
        }
        out.push_back(deviation_check("reconstruction loss is non-negative and zero on exact reconstruction", worst, 1e-12));
    }

    {
        // Near-identical embeddings keep every exponent argument small.
        double worst_gap = 0.0;
        bool ranks = true;
        bool flagged = false;
        double worst_form = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Vector base = gaussian(8, rng);
            std::vector<LabeledEmbedding> batch;
            for (const char* id : {"a", "b", "c"})
                for (int v = 0; v < 3; ++v) batch.push_back({id, unit_embedding(base + 0.01 * gaussian(8, rng))});
            const auto report = bregman::taylor_gap(batch, 0.1);
            worst_gap = std::max(worst_gap, report.max_relative_gap);
            ranks = ranks && report.ranks_agree;
            flagged = flagged || report.regime_violated;
            worst_form = std::max(worst_form, report.bregman_form_deviation);
        }
        out.push_back({"first-order surrogate within 5% for small arguments", worst_gap <= 0.05 && ranks && !flagged,
                       worst_gap, 0.05});

        std::vector<LabeledEmbedding> far;
        for (const char* id : {"a", "b"})
            for (int v = 0; v < 2; ++v) {
                Vector e = Vector::Zero(4);
                e(id[0] == 'a' ? 0 : 1) = 1.0;
                far.push_back({id, unit_embedding(e)});
            }
        const auto report = bregman::taylor_gap(far, 0.1);
        out.push_back({"arguments of size " + text::format_double(report.max_argument) + " are flagged",
                       report.regime_violated, 0.0, 0.0});
        out.push_back(deviation_check("distance form of the discrimination surrogate",
                                      std::max(worst_form, report.bregman_form_deviation), 1e-10));
    }
    return out;
}

}  // namespace radssl
