#pragma once

// Bregman divergences with pluggable generators, and numerical checks that
// the reconstruction and discrimination losses decompose into them.

#include "radssl/augmentation.hpp"
#include "radssl/losses.hpp"

#include <functional>
#include <string>
#include <vector>

namespace radssl::bregman {

enum class Domain { all_reals, open_simplex };

struct Generator {
    std::string name;
    std::function<double(const Vector&)> psi;
    std::function<Vector(const Vector&)> grad_psi;
    Domain domain = Domain::all_reals;
};

// psi(x) = <x, x>. Its divergence is the squared Euclidean distance.
Generator squared_norm();

// psi(x) = sum x_h ln x_h on the open simplex. Entries below `floor` are
// clamped to it before evaluation. Its divergence is KL.
Generator negative_entropy(double floor = 1e-12);

// a * g1 + b * g2 for a, b > 0. The domain is the narrower of the two.
Generator combine(double a, const Generator& g1, double b, const Generator& g2);

// psi(p) - psi(q) - <grad psi(q), p - q>. Throws std::domain_error when p or q
// falls outside the generator's domain (negative entries, or a simplex sum off by
// more than 1e-9).
double divergence(const Generator& g, const Vector& p, const Vector& q);

struct IdentityReport {
    std::string name;
    int trials = 0;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    [[nodiscard]] bool passed() const { return max_deviation <= tolerance; }
};

// Random vector pairs: |D_sq(p, q) - ||p - q||^2| <= 1e-10.
IdentityReport verify_squared_norm_identity(int trials, Rng& rng, int dim = 100);

// Random interior simplex pairs: |D_negentropy(p, q) - KL(p || q)| <= 1e-10.
// Also compares against the expanded form sum p ln(p/q) - ln exp(sum (p - q)),
// whose correction term vanishes only because both vectors sum to 1.
IdentityReport verify_entropy_identity(int trials, Rng& rng, int dim = 50);

// First-order view of the discrimination loss. For anchor a with positives P
// and negatives Q, s_k = <a, f_k> / tau and
//
//   exact     l(a) = ln(sum_{P u Q} e^s) - ln(sum_P e^s)
//   surrogate S(a) = sum_{k in Q} (s_k - mean_P s)
//   affine    l(a) ~ ln((|P| + |Q|) / |P|) + S(a) / (|P| + |Q|)
//
// The affine form is the Taylor expansion about equal arguments.
struct AnchorGap {
    std::string subject_id;
    double exact = 0.0;
    double surrogate = 0.0;
    double affine = 0.0;
    double max_argument = 0.0;  // max |s_k - mean_P s| over P u Q
};

struct TaylorGapReport {
    std::vector<AnchorGap> anchors;
    double exact_total = 0.0;   // discrimination loss
    double affine_total = 0.0;  // same anchor weighting applied to the affine form
    double max_relative_gap = 0.0;
    double max_argument = 0.0;
    bool ranks_agree = true;     // anchors ordered identically by exact and surrogate
    bool regime_violated = false;  // max_argument > 0.1
    // For unit-norm embeddings, sum_Q ||a - f_k||^2 - (|Q|/|P|) sum_P ||a - f_k||^2
    // equals -2 tau S(a); this is the largest deviation from that identity.
    double bregman_form_deviation = 0.0;
    [[nodiscard]] std::string flag() const { return regime_violated ? "approximation regime violated" : "ok"; }
};

TaylorGapReport taylor_gap(std::span<const LabeledEmbedding> batch, double tau);

// Uniform draw from the open simplex (Dirichlet(1, ..., 1)).
Vector random_simplex(int dim, Rng& rng);

}  // namespace radssl::bregman
