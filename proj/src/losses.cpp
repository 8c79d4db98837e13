#include "radssl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace radssl {

ProbVector::ProbVector(Vector entries) : entries_(std::move(entries)) {
    if (entries_.size() == 0) throw LossError("probability vector is empty");
    if ((entries_.array() < 0.0).any() || !entries_.allFinite())
        throw LossError("probability vector has negative or non-finite entries");
    if (std::abs(entries_.sum() - 1.0) > 1e-9) throw LossError("probability vector does not sum to 1");
}

void LossWeights::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw LossError("beta must lie in [0, 1]");
    if (!(lambda >= 0.0)) throw LossError("lambda must be >= 0");
    if (!(tau > 0.0)) throw LossError("tau must be > 0");
}

ProbVector to_prob(const Matrix& x) {
    if (!x.allFinite()) throw LossError("to_prob: non-finite input");
    Vector flat(x.size());
    for (Eigen::Index r = 0, i = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) flat(i++) = x(r, c);
    const double mx = flat.maxCoeff();
    flat = (flat.array() - mx).exp().matrix();
    flat /= flat.sum();
    return ProbVector(std::move(flat));
}

double kl_div(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) throw LossError("kl_div: length mismatch");
    double total = 0.0;
    for (Eigen::Index h = 0; h < p.size(); ++h) {
        if (p[h] == 0.0) continue;
        if (q[h] == 0.0) throw LossError("kl_div: infinite divergence (p > 0 where q = 0)");
        total += p[h] * std::log(p[h] / q[h]);
    }
    return std::max(total, 0.0);
}

double js_div(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) throw LossError("js_div: length mismatch");
    const ProbVector z(0.5 * (p.entries() + q.entries()));
    return 0.5 * kl_div(p, z) + 0.5 * kl_div(q, z);
}

double recon_loss(const Matrix& x, std::span<const Matrix> reconstructions, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw LossError("recon_loss: beta must lie in [0, 1]");
    const auto px = to_prob(x);
    double total = 0.0;
    for (const auto& xh : reconstructions) {
        if (xh.rows() != x.rows() || xh.cols() != x.cols()) throw LossError("recon_loss: reconstruction shape mismatch");
        total += beta * (x - xh).squaredNorm() + (1.0 - beta) * js_div(px, to_prob(xh));
    }
    return total;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

double pairwise_nll(const ViewEmbedding& anchor, std::span<const LabeledEmbedding> context,
                    std::string_view anchor_subject, double tau) {
    if (!(tau > 0.0)) throw LossError("pairwise_nll: tau must be > 0");
    std::vector<double> pos;
    std::vector<double> all;
    for (const auto& e : context) {
        if (e.embedding.flat_normalized.size() != anchor.flat_normalized.size())
            throw LossError("pairwise_nll: embedding length mismatch");
        const double s = anchor.flat_normalized.dot(e.embedding.flat_normalized) / tau;
        all.push_back(s);
        if (e.subject_id == anchor_subject) pos.push_back(s);
    }
    if (pos.empty()) throw LossError("pairwise_nll: no positive for subject '" + std::string(anchor_subject) + "'");
    if (pos.size() == all.size()) throw LossError("pairwise_nll: no negatives in batch");
    return log_sum_exp(all) - log_sum_exp(pos);
}

double pairwise_nll_at(std::span<const LabeledEmbedding> batch, std::size_t anchor_index, double tau) {
    if (anchor_index >= batch.size()) throw LossError("pairwise_nll_at: anchor index out of range");
    std::vector<LabeledEmbedding> context;
    context.reserve(batch.size() - 1);
    for (std::size_t i = 0; i < batch.size(); ++i)
        if (i != anchor_index) context.push_back(batch[i]);
    return pairwise_nll(batch[anchor_index].embedding, context, batch[anchor_index].subject_id, tau);
}

double discrimination_loss(std::span<const LabeledEmbedding> batch, double tau) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < batch.size(); ++i) groups[batch[i].subject_id].push_back(i);
    if (groups.size() < 2) throw LossError("discrimination_loss: need at least 2 subjects");
    double total = 0.0;
    for (const auto& [subject, rows] : groups) {
        if (rows.size() < 2) throw LossError("discrimination_loss: subject '" + subject + "' has fewer than 2 views");
        double s = 0.0;
        for (auto a : rows) s += pairwise_nll_at(batch, a, tau);
        total += s / static_cast<double>(rows.size());
    }
    return total / static_cast<double>(groups.size());
}

double total_loss(double recon, double disc, double lambda) {
    if (!(lambda >= 0.0)) throw LossError("total_loss: lambda must be >= 0");
    return recon + lambda * disc;
}

ad::Var js_div_graph(ad::Var x, ad::Var x_hat) {
    const auto log_p = ad::log_softmax_all(x);
    const auto log_q = ad::log_softmax_all(x_hat);
    const auto p = ad::exp(log_p);
    const auto q = ad::exp(log_q);
    const auto log_z = ad::log(ad::scale(ad::add(p, q), 0.5));
    const auto kl_p = ad::sum(ad::mul(p, ad::sub(log_p, log_z)));
    const auto kl_q = ad::sum(ad::mul(q, ad::sub(log_q, log_z)));
    return ad::scale(ad::add(kl_p, kl_q), 0.5);
}

ad::Var recon_loss_graph(ad::Var x, std::span<const ad::Var> reconstructions, double beta,
                         std::span<const std::vector<Eigen::Index>> rows) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw LossError("recon_loss: beta must lie in [0, 1]");
    if (reconstructions.empty()) throw LossError("recon_loss: no reconstructions");
    if (!rows.empty() && rows.size() != reconstructions.size())
        throw LossError("recon_loss: one row list per reconstruction required");
    std::vector<ad::Var> terms;
    terms.reserve(reconstructions.size());
    for (std::size_t j = 0; j < reconstructions.size(); ++j) {
        auto xh = reconstructions[j];
        if (xh.rows() != x.rows() || xh.cols() != x.cols()) throw LossError("recon_loss: reconstruction shape mismatch");
        auto target = x;
        if (!rows.empty()) {
            target = ad::select_rows(x, rows[j]);
            xh = ad::select_rows(xh, rows[j]);
        }
        ad::Var term;
        if (beta > 0.0) term = ad::scale(ad::sum_squares(ad::sub(target, xh)), beta);
        if (beta < 1.0) {
            const auto js = ad::scale(js_div_graph(target, xh), 1.0 - beta);
            term = beta > 0.0 ? ad::add(term, js) : js;
        }
        terms.push_back(term);
    }
    return ad::sum(ad::vcat(terms));
}

ad::Var discrimination_loss_graph(ad::Var embeddings, std::span<const int> subject_of_row, double tau) {
    if (!(tau > 0.0)) throw LossError("discrimination_loss: tau must be > 0");
    const auto n = embeddings.rows();
    if (static_cast<Eigen::Index>(subject_of_row.size()) != n)
        throw LossError("discrimination_loss: one subject id per embedding row required");

    std::map<int, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[subject_of_row[static_cast<std::size_t>(i)]].push_back(i);
    if (groups.size() < 2) throw LossError("discrimination_loss: need at least 2 subjects");
    // Per-anchor weight 1 / (M * K_i).
    Eigen::VectorXd weight(n);
    for (const auto& [id, rows] : groups) {
        if (rows.size() < 2) throw LossError("discrimination_loss: subject has fewer than 2 views");
        for (auto r : rows) weight(r) = 1.0 / (static_cast<double>(groups.size()) * static_cast<double>(rows.size()));
    }
    std::vector<int> subject(subject_of_row.begin(), subject_of_row.end());

    const auto sims = ad::scale(ad::matmul_nt(embeddings, embeddings), 1.0 / tau);
    const Matrix& s = sims.value();
    // Softmax over the non-self entries of each row, and over the positives only.
    Matrix soft_all = Matrix::Zero(n, n);
    Matrix soft_pos = Matrix::Zero(n, n);
    double loss = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index b = 0; b < n; ++b)
            if (b != a) mx = std::max(mx, s(a, b));
        double z_all = 0.0;
        double z_pos = 0.0;
        for (Eigen::Index b = 0; b < n; ++b) {
            if (b == a) continue;
            const double e = std::exp(s(a, b) - mx);
            soft_all(a, b) = e;
            z_all += e;
            if (subject[static_cast<std::size_t>(b)] == subject[static_cast<std::size_t>(a)]) {
                soft_pos(a, b) = e;
                z_pos += e;
            }
        }
        soft_all.row(a) /= z_all;
        soft_pos.row(a) /= z_pos;
        loss += weight(a) * (std::log(z_all) - std::log(z_pos));
    }
    const ad::Var in[] = {sims};
    return sims.tape()->record(
        Matrix::Constant(1, 1, loss), in,
        [sims, weight, soft_all = std::move(soft_all), soft_pos = std::move(soft_pos)](ad::Tape& tp, const Matrix&,
                                                                                         const Matrix& g) {
            Matrix d = soft_all - soft_pos;
            d.array().colwise() *= weight.array();
            tp.accumulate(sims, g(0, 0) * d);
        });
}

}  // namespace radssl
