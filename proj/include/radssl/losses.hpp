#pragma once

// Reconstruction loss (squared error mixed with Jensen-Shannon divergence),
// subject-similarity discrimination loss, and the joint objective.
//
// Each loss has a plain numeric form and a tape form used for training.
// The two are kept separate so tests can check one against the other.

#include "radssl/autodiff.hpp"
#include "radssl/encoder.hpp"
#include "radssl/feature_map.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radssl {

class LossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A point on the probability simplex: entries >= 0 summing to 1 within 1e-9.
class ProbVector {
public:
    explicit ProbVector(Vector entries);
    [[nodiscard]] const Vector& entries() const { return entries_; }
    [[nodiscard]] Eigen::Index size() const { return entries_.size(); }
    [[nodiscard]] double operator[](Eigen::Index i) const { return entries_(i); }

private:
    Vector entries_;
};

struct LossWeights {
    double beta = 0.5;    // squared-error share of the reconstruction loss
    double lambda = 1.0;  // weight of the discrimination loss
    double tau = 0.1;     // temperature

    void validate() const;
};

// Normalized exponential over every entry of `x`, flattened row-major.
ProbVector to_prob(const Matrix& x);

// Sum p ln(p / q) with 0 ln(0 / q) = 0. Throws when p > 0 meets q = 0.
double kl_div(const ProbVector& p, const ProbVector& q);

// Half KL to the equal mixture, both ways. Bounded by ln 2.
double js_div(const ProbVector& p, const ProbVector& q);

// Sum over views of beta ||x - xhat||^2 + (1 - beta) JS(p(x) || p(xhat)).
double recon_loss(const Matrix& x, std::span<const Matrix> reconstructions, double beta);
inline double recon_loss(const FeatureMap& x, std::span<const Matrix> reconstructions, double beta) {
    return recon_loss(x.values, reconstructions, beta);
}

struct LabeledEmbedding {
    std::string subject_id;
    ViewEmbedding embedding;
};

// -ln( sum_pos exp(<a,f>/tau) / sum_all exp(<a,f>/tau) ). `context` must not
// contain the anchor itself; positives are its entries from `anchor_subject`.
double pairwise_nll(const ViewEmbedding& anchor, std::span<const LabeledEmbedding> context,
                    std::string_view anchor_subject, double tau);

// Same, with the anchor taken from the batch at `anchor_index` and excluded
// from both sums.
double pairwise_nll_at(std::span<const LabeledEmbedding> batch, std::size_t anchor_index, double tau);

// Average of pairwise_nll over every view of every subject, subjects weighted
// equally. With two views per subject this is exactly
// (1/2M) sum_i [l(f_i1, f_i2) + l(f_i2, f_i1)].
double discrimination_loss(std::span<const LabeledEmbedding> batch, double tau);

double total_loss(double recon, double disc, double lambda);

// ---- tape forms ---------------------------------------------------------

ad::Var js_div_graph(ad::Var x, ad::Var x_hat);

// `x` is the target map (usually a constant node). When `rows` is non-empty
// only those ROI rows of each view enter the loss; it holds one row list per view.
ad::Var recon_loss_graph(ad::Var x, std::span<const ad::Var> reconstructions, double beta,
                         std::span<const std::vector<Eigen::Index>> rows = {});

// `embeddings` holds one L2-normalized view per row; `subject_of_row` groups rows
// into subjects (any integer ids).
ad::Var discrimination_loss_graph(ad::Var embeddings, std::span<const int> subject_of_row, double tau);

}  // namespace radssl
