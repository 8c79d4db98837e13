#include "radssl/bregman.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace radssl::bregman {

Generator squared_norm() {
    return {"squared-norm", [](const Vector& x) { return x.squaredNorm(); }, [](const Vector& x) -> Vector { return 2.0 * x; },
            Domain::all_reals};
}

Generator negative_entropy(double floor) {
    auto clamp = [floor](const Vector& x) -> Vector { return x.cwiseMax(floor); };
    return {"negative-entropy",
            [clamp](const Vector& x) {
                const Vector c = clamp(x);
                return (c.array() * c.array().log()).sum();
            },
            [clamp](const Vector& x) -> Vector { return (clamp(x).array().log() + 1.0).matrix(); }, Domain::open_simplex};
}

Generator combine(double a, const Generator& g1, double b, const Generator& g2) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("combine: weights must be positive");
    const auto domain = (g1.domain == Domain::open_simplex || g2.domain == Domain::open_simplex) ? Domain::open_simplex
                                                                                                  : Domain::all_reals;
    return {std::to_string(a) + "*" + g1.name + "+" + std::to_string(b) + "*" + g2.name,
            [=](const Vector& x) { return a * g1.psi(x) + b * g2.psi(x); },
            [=](const Vector& x) -> Vector { return a * g1.grad_psi(x) + b * g2.grad_psi(x); }, domain};
}

namespace {

void check_domain(const Generator& g, const Vector& v, const char* which) {
    if (!v.allFinite()) throw std::domain_error(std::string("bregman: non-finite entry in ") + which);
    if (g.domain != Domain::open_simplex) return;
    if ((v.array() < 0.0).any()) throw std::domain_error(std::string("bregman: negative entry in ") + which);
    if (std::abs(v.sum() - 1.0) > 1e-9) throw std::domain_error(std::string("bregman: ") + which + " is not on the simplex");
}

}  // namespace

double divergence(const Generator& g, const Vector& p, const Vector& q) {
    if (p.size() != q.size()) throw std::invalid_argument("bregman: length mismatch");
    check_domain(g, p, "p");
    check_domain(g, q, "q");
    return g.psi(p) - g.psi(q) - g.grad_psi(q).dot(p - q);
}

Vector random_simplex(int dim, Rng& rng) {
    std::gamma_distribution<double> gamma(1.0, 1.0);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = std::max(gamma(rng), 1e-300);
    return v / v.sum();
}

IdentityReport verify_squared_norm_identity(int trials, Rng& rng, int dim) {
    if (trials < 1) throw std::invalid_argument("verify: trials must be >= 1");
    IdentityReport report{"squared-norm divergence equals squared distance", trials, 0.0, 1e-10};
    const auto g = squared_norm();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Vector p(dim);
        Vector q(dim);
        for (int i = 0; i < dim; ++i) {
            p(i) = normal(rng);
            q(i) = normal(rng);
        }
        report.max_deviation = std::max(report.max_deviation, std::abs(divergence(g, p, q) - (p - q).squaredNorm()));
    }
    return report;
}

IdentityReport verify_entropy_identity(int trials, Rng& rng, int dim) {
    if (trials < 1) throw std::invalid_argument("verify: trials must be >= 1");
    IdentityReport report{"negative-entropy divergence equals KL", trials, 0.0, 1e-10};
    const auto g = negative_entropy();
    for (int t = 0; t < trials; ++t) {
        const Vector p = random_simplex(dim, rng);
        const Vector q = random_simplex(dim, rng);
        const double kl = kl_div(ProbVector(p), ProbVector(q));
        const double expanded = (p.array() * (p.array() / q.array()).log()).sum() - std::log(std::exp((p - q).sum()));
        const double d = divergence(g, p, q);
        report.max_deviation = std::max({report.max_deviation, std::abs(d - kl), std::abs(expanded - kl)});
    }
    return report;
}

TaylorGapReport taylor_gap(std::span<const LabeledEmbedding> batch, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("taylor_gap: tau must be > 0");
    TaylorGapReport report;
    std::map<std::string, int> views;
    for (const auto& e : batch) ++views[e.subject_id];
    if (views.size() < 2) throw std::invalid_argument("taylor_gap: need at least 2 subjects");

    for (std::size_t a = 0; a < batch.size(); ++a) {
        const auto& anchor = batch[a].embedding.flat_normalized;
        std::vector<double> pos;
        std::vector<double> neg;
        double d_pos = 0.0;
        double d_neg = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            if (b == a) continue;
            const auto& f = batch[b].embedding.flat_normalized;
            const double s = anchor.dot(f) / tau;
            if (batch[b].subject_id == batch[a].subject_id) {
                pos.push_back(s);
                d_pos += (anchor - f).squaredNorm();
            } else {
                neg.push_back(s);
                d_neg += (anchor - f).squaredNorm();
            }
        }
        if (pos.empty()) throw std::invalid_argument("taylor_gap: subject '" + batch[a].subject_id + "' has one view");
        const double np = static_cast<double>(pos.size());
        const double nq = static_cast<double>(neg.size());
        double mean_pos = 0.0;
        for (double s : pos) mean_pos += s;
        mean_pos /= np;

        AnchorGap gap;
        gap.subject_id = batch[a].subject_id;
        gap.exact = pairwise_nll_at(batch, a, tau);
        for (double s : neg) gap.surrogate += s - mean_pos;
        gap.affine = std::log((np + nq) / np) + gap.surrogate / (np + nq);
        for (double s : pos) gap.max_argument = std::max(gap.max_argument, std::abs(s - mean_pos));
        for (double s : neg) gap.max_argument = std::max(gap.max_argument, std::abs(s - mean_pos));

        const double weight = 1.0 / (static_cast<double>(views.size()) * static_cast<double>(views[gap.subject_id]));
        report.exact_total += weight * gap.exact;
        report.affine_total += weight * gap.affine;
        report.max_argument = std::max(report.max_argument, gap.max_argument);
        if (gap.exact != 0.0)
            report.max_relative_gap = std::max(report.max_relative_gap, std::abs(gap.exact - gap.affine) / std::abs(gap.exact));
        const double bregman_form = d_neg - (nq / np) * d_pos;
        report.bregman_form_deviation =
            std::max(report.bregman_form_deviation, std::abs(bregman_form - (-2.0 * tau * gap.surrogate)));
        report.anchors.push_back(gap);
    }

    for (std::size_t i = 0; i < report.anchors.size(); ++i) {
        for (std::size_t j = i + 1; j < report.anchors.size(); ++j) {
            const double de = report.anchors[i].exact - report.anchors[j].exact;
            const double da = report.anchors[i].affine - report.anchors[j].affine;
            if (std::abs(de) > 1e-12 && std::abs(da) > 1e-12 && (de > 0) != (da > 0)) report.ranks_agree = false;
        }
    }
    report.regime_violated = report.max_argument > 0.1;
    return report;
}

}  // namespace radssl::bregman
