#include "radssl/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace radssl::sim {

void MomentSpec::validate() const {
    if (n_roi < 2 || n_features < 1) throw SimulationError("moment spec: need n_roi >= 2 and n_features >= 1");
    const auto d = n_variables();
    const Eigen::Index side = mode == CorrelationMode::block ? n_features : d;
    if (correlation.rows() != side || correlation.cols() != side)
        throw SimulationError("moment spec: correlation matrix has the wrong shape");
    if (skewness.size() != d || kurtosis.size() != d || range_min.size() != d || range_max.size() != d)
        throw SimulationError("moment spec: per-variable vectors must have length N_roi * F");
    if (!correlation.isApprox(correlation.transpose(), 1e-12)) throw SimulationError("moment spec: correlation not symmetric");
    for (Eigen::Index i = 0; i < side; ++i)
        if (std::abs(correlation(i, i) - 1.0) > 1e-9) throw SimulationError("moment spec: correlation diagonal must be 1");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(correlation, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8) throw SimulationError("moment spec: correlation is not positive semidefinite");
    for (int v = 0; v < d; ++v) {
        if (kurtosis(v) < skewness(v) * skewness(v) + 1.0)
            throw SimulationError("moment spec: variable " + std::to_string(v) + " has kurtosis < skewness^2 + 1");
        if (!(range_max(v) >= range_min(v))) throw SimulationError("moment spec: variable " + std::to_string(v) + " has max < min");
    }
}

void SimConfig::validate(int n_roi) const {
    if (n_samples < 2 || n_samples % 2 != 0) throw SimulationError("sim config: n_samples must be even and >= 2");
    if (!(theta > 0.0)) throw SimulationError("sim config: theta must be > 0");
    if (!(noise_sd >= 0.0)) throw SimulationError("sim config: noise_sd must be >= 0");
    if (separated_rois.empty()) throw SimulationError("sim config: separated_rois is empty");
    for (int r : separated_rois)
        if (r < 0 || r >= n_roi) throw SimulationError("sim config: separated ROI " + std::to_string(r) + " out of range");
}

std::vector<int> first_rois(int count) {
    std::vector<int> rois(static_cast<std::size_t>(std::max(count, 0)));
    std::iota(rois.begin(), rois.end(), 0);
    return rois;
}

namespace {

struct ColumnMoments {
    double mean = 0.0;
    double m2 = 0.0;
    double skew = 0.0;
    double kurt = 3.0;
    double min = 0.0;
    double max = 0.0;
    bool constant = false;
};

ColumnMoments column_moments(const Vector& x) {
    ColumnMoments m;
    const double n = static_cast<double>(x.size());
    m.mean = x.mean();
    m.min = x.minCoeff();
    m.max = x.maxCoeff();
    const Eigen::ArrayXd c = x.array() - m.mean;
    m.m2 = c.square().sum() / n;
    const double scale = std::max(1.0, std::abs(m.mean));
    if (m.m2 <= 1e-24 * scale * scale) {
        m.constant = true;
        return m;
    }
    m.skew = (c.cube().sum() / n) / std::pow(m.m2, 1.5);
    m.kurt = (c.square().square().sum() / n) / (m.m2 * m.m2);
    return m;
}

// Columns = variables (roi * F + feature), rows = subjects.
Matrix variable_matrix(const Dataset& d) {
    const auto f = d.n_features();
    Matrix out(static_cast<Eigen::Index>(d.size()), d.n_roi() * f);
    for (std::size_t s = 0; s < d.size(); ++s)
        for (Eigen::Index r = 0; r < d.n_roi(); ++r)
            out.block(static_cast<Eigen::Index>(s), r * f, 1, f) = d.maps[s].values.row(r);
    return out;
}

Matrix correlation_of(const Matrix& x, const std::vector<bool>& constant) {
    const Matrix centered = x.rowwise() - x.colwise().mean();
    Matrix cov = centered.transpose() * centered;
    const Vector sd = cov.diagonal().cwiseSqrt();
    Matrix corr = Matrix::Identity(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (i != j && !constant[static_cast<std::size_t>(i)] && !constant[static_cast<std::size_t>(j)])
                corr(i, j) = std::clamp(cov(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
    return corr;
}

// Factor L with L L^T the nearest unit-diagonal PSD matrix to `r`.
Matrix psd_factor(const Matrix& r) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(r);
    const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
    Matrix l = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const double n = l.row(i).norm();
        if (n > 0.0) l.row(i) /= n;
    }
    return l;
}

}  // namespace

MomentSpec estimate_moments(const Dataset& dataset, CorrelationMode mode) {
    dataset.validate();
    if (dataset.size() < 3) throw SimulationError("estimate_moments: need at least 3 subjects");
    MomentSpec spec;
    spec.n_roi = static_cast<int>(dataset.n_roi());
    spec.n_features = static_cast<int>(dataset.n_features());
    spec.mode = mode;
    const auto x = variable_matrix(dataset);
    const auto d = x.cols();
    spec.skewness.resize(d);
    spec.kurtosis.resize(d);
    spec.range_min.resize(d);
    spec.range_max.resize(d);
    std::vector<bool> constant(static_cast<std::size_t>(d));
    for (Eigen::Index v = 0; v < d; ++v) {
        const auto m = column_moments(x.col(v));
        spec.skewness(v) = m.skew;
        spec.kurtosis(v) = m.kurt;
        spec.range_min(v) = m.min;
        spec.range_max(v) = m.max;
        constant[static_cast<std::size_t>(v)] = m.constant;
        if (m.constant) spec.warnings.push_back("variable " + std::to_string(v) + " is constant; correlations zeroed");
    }
    if (mode == CorrelationMode::full) {
        spec.correlation = correlation_of(x, constant);
    } else {
        const auto f = spec.n_features;
        spec.correlation = Matrix::Zero(f, f);
        for (int r = 0; r < spec.n_roi; ++r) {
            std::vector<bool> block_constant(constant.begin() + r * f, constant.begin() + (r + 1) * f);
            spec.correlation += correlation_of(x.middleCols(r * f, f), block_constant);
        }
        spec.correlation /= static_cast<double>(spec.n_roi);
        spec.correlation.diagonal().setOnes();
    }
    return spec;
}

CubicTransform fit_cubic_transform(double skewness, double kurtosis) {
    const double g1 = skewness;
    const double g2 = kurtosis - 3.0;
    auto residual = [&](const Eigen::Vector3d& p) {
        const double b = p(0), c = p(1), d = p(2);
        return Eigen::Vector3d(b * b + 6 * b * d + 2 * c * c + 15 * d * d - 1.0,
                               2 * c * (b * b + 24 * b * d + 105 * d * d + 2) - g1,
                               24 * (b * d + c * c * (1 + b * b + 28 * b * d) +
                                     d * d * (12 + 48 * b * d + 141 * c * c + 225 * d * d)) -
                                   g2);
    };
    auto jacobian = [](const Eigen::Vector3d& p) {
        const double b = p(0), c = p(1), d = p(2);
        Eigen::Matrix3d j;
        j(0, 0) = 2 * b + 6 * d;
        j(0, 1) = 4 * c;
        j(0, 2) = 6 * b + 30 * d;
        j(1, 0) = 2 * c * (2 * b + 24 * d);
        j(1, 1) = 2 * (b * b + 24 * b * d + 105 * d * d + 2);
        j(1, 2) = 2 * c * (24 * b + 210 * d);
        j(2, 0) = 24 * (d + c * c * (2 * b + 28 * d) + 48 * d * d * d);
        j(2, 1) = 24 * (2 * c * (1 + b * b + 28 * b * d) + 282 * c * d * d);
        j(2, 2) = 24 * (b + 28 * b * c * c + 2 * d * (12 + 48 * b * d + 141 * c * c + 225 * d * d) +
                        d * d * (48 * b + 450 * d));
        return j;
    };

    const std::array<Eigen::Vector3d, 6> starts = {
        Eigen::Vector3d(1.0, 0.0, 0.0),          Eigen::Vector3d(0.9, g1 / 6.0, 0.02),
        Eigen::Vector3d(0.8, g1 / 8.0, 0.05),    Eigen::Vector3d(0.6, g1 / 10.0, 0.1),
        Eigen::Vector3d(1.1, g1 / 6.0, -0.02),   Eigen::Vector3d(0.4, g1 / 12.0, 0.15)};
    for (const auto& start : starts) {
        Eigen::Vector3d p = start;
        for (int it = 0; it < 200; ++it) {
            const Eigen::Vector3d r = residual(p);
            if (r.norm() < 1e-13) break;
            const Eigen::Vector3d step = jacobian(p).colPivHouseholderQr().solve(r);
            double t = 1.0;
            while (t > 1e-4 && residual(p - t * step).norm() >= r.norm()) t *= 0.5;
            p -= t * step;
        }
        if (residual(p).norm() < 1e-10 && p(0) > 0.0 && p.allFinite()) return {-p(1), p(0), p(1), p(2)};
    }
    throw SimulationError("infeasible skewness/kurtosis pair for a cubic transform: skewness=" + std::to_string(skewness) +
                          ", kurtosis=" + std::to_string(kurtosis));
}

double transformed_correlation(const CubicTransform& t1, const CubicTransform& t2, double rho) {
    return rho * (t1.b * t2.b + 3 * t1.b * t2.d + 3 * t1.d * t2.b + 9 * t1.d * t2.d) + 2 * t1.c * t2.c * rho * rho +
           6 * t1.d * t2.d * rho * rho * rho;
}

double intermediate_correlation(const CubicTransform& t1, const CubicTransform& t2, double target) {
    auto f = [&](double rho) { return transformed_correlation(t1, t2, rho) - target; };
    double lo = -1.0, hi = 1.0;
    double flo = f(lo), fhi = f(hi);
    if (flo > 0.0) return lo;
    if (fhi < 0.0) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

Matrix intermediate_matrix(const Matrix& target, std::span<const CubicTransform> transforms) {
    Matrix r = Matrix::Identity(target.rows(), target.cols());
    for (Eigen::Index i = 0; i < target.rows(); ++i)
        for (Eigen::Index j = i + 1; j < target.cols(); ++j)
            r(i, j) = r(j, i) = intermediate_correlation(transforms[static_cast<std::size_t>(i)],
                                                          transforms[static_cast<std::size_t>(j)], target(i, j));
    return r;
}

std::string numbered(const char* prefix, int i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
    return buf;
}

}  // namespace

Dataset generate(const MomentSpec& spec, const SimConfig& config) {
    spec.validate();
    config.validate(spec.n_roi);
    const int n = config.n_samples;
    const int f = spec.n_features;
    const int d = spec.n_variables();

    std::vector<CubicTransform> transforms;
    transforms.reserve(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) transforms.push_back(fit_cubic_transform(spec.skewness(v), spec.kurtosis(v)));

    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // (a) correlated Gaussians, (b) cubic marginal transforms.
    Matrix y(n, d);
    auto fill = [&](Eigen::Index first, Eigen::Index count, const Matrix& factor) {
        Matrix z(n, count);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < count; ++j) z(i, j) = normal(rng);
        const Matrix correlated = z * factor.transpose();
        for (Eigen::Index j = 0; j < count; ++j) {
            const auto& t = transforms[static_cast<std::size_t>(first + j)];
            for (Eigen::Index i = 0; i < n; ++i) y(i, first + j) = t(correlated(i, j));
        }
    };
    if (spec.mode == CorrelationMode::full) {
        fill(0, d, psd_factor(intermediate_matrix(spec.correlation, transforms)));
    } else {
        for (int r = 0; r < spec.n_roi; ++r) {
            std::span<const CubicTransform> block(transforms.data() + r * f, static_cast<std::size_t>(f));
            fill(r * f, f, psd_factor(intermediate_matrix(spec.correlation, block)));
        }
    }

    // (c) affine rescale of each variable onto its target range.
    for (int v = 0; v < d; ++v) {
        const double lo = y.col(v).minCoeff();
        const double hi = y.col(v).maxCoeff();
        const double width = spec.range_max(v) - spec.range_min(v);
        if (hi > lo)
            y.col(v) = ((y.col(v).array() - lo) / (hi - lo) * width + spec.range_min(v)).matrix();
        else
            y.col(v).setConstant(spec.range_min(v) + 0.5 * width);
    }

    // (d) exactly half the subjects get label 1.
    std::vector<double> labels(static_cast<std::size_t>(n), 0.0);
    std::fill(labels.begin(), labels.begin() + n / 2, 1.0);
    std::shuffle(labels.begin(), labels.end(), rng);

    // (e) class shift -mean/theta (label 0) or +mean/theta (label 1) on separated ROIs.
    if (config.apply_separation) {
        for (int roi : config.separated_rois) {
            for (int j = 0; j < f; ++j) {
                const int v = roi * f + j;
                const double shift = y.col(v).mean() / config.theta;
                for (int i = 0; i < n; ++i) y(i, v) += labels[static_cast<std::size_t>(i)] > 0.5 ? shift : -shift;
            }
        }
    }

    // (f) additive Gaussian noise.
    if (config.noise_sd > 0.0) {
        std::normal_distribution<double> noise(0.0, config.noise_sd);
        for (int i = 0; i < n; ++i)
            for (int v = 0; v < d; ++v) y(i, v) += noise(rng);
    }

    Dataset out;
    std::vector<std::string> roi_ids;
    std::vector<std::string> feature_names;
    for (int r = 0; r < spec.n_roi; ++r) roi_ids.push_back(numbered("roi_", r, 3));
    for (int j = 0; j < f; ++j) feature_names.push_back(numbered("feat_", j, 3));
    out.maps.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        FeatureMap m;
        m.subject_id = numbered("sim_", i, 5);
        m.roi_ids = roi_ids;
        m.feature_names = feature_names;
        m.values.resize(spec.n_roi, f);
        for (int r = 0; r < spec.n_roi; ++r) m.values.row(r) = y.block(i, r * f, 1, f);
        out.maps.push_back(std::move(m));
    }
    out.labels = std::move(labels);
    return out;
}

SimulationReport verify_simulation(const Dataset& generated, const MomentSpec& spec, Tolerances tol) {
    spec.validate();
    if (generated.n_roi() != spec.n_roi || generated.n_features() != spec.n_features)
        throw SimulationError("verify_simulation: dataset shape does not match the moment spec");
    SimulationReport report;
    const auto x = variable_matrix(generated);
    const int d = spec.n_variables();
    const int f = spec.n_features;
    std::vector<bool> constant(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
        const auto m = column_moments(x.col(v));
        constant[static_cast<std::size_t>(v)] = m.constant;
        const double es = std::abs(m.skew - spec.skewness(v));
        const double ek = std::abs(m.kurt - spec.kurtosis(v));
        report.max_skewness_error = std::max(report.max_skewness_error, es);
        report.max_kurtosis_error = std::max(report.max_kurtosis_error, ek);
        if (es > tol.skewness) report.violations.push_back({"skewness", v, -1, spec.skewness(v), m.skew});
        if (ek > tol.kurtosis) report.violations.push_back({"kurtosis", v, -1, spec.kurtosis(v), m.kurt});
    }
    auto check_pair = [&](int v, int w, double target, double achieved) {
        const double e = std::abs(achieved - target);
        report.max_correlation_error = std::max(report.max_correlation_error, e);
        if (e > tol.correlation) report.violations.push_back({"correlation", v, w, target, achieved});
    };
    const auto corr = correlation_of(x, constant);
    for (int v = 0; v < d; ++v) {
        for (int w = v + 1; w < d; ++w) {
            if (spec.mode == CorrelationMode::full) {
                check_pair(v, w, spec.correlation(v, w), corr(v, w));
            } else {
                const bool same_roi = v / f == w / f;
                check_pair(v, w, same_roi ? spec.correlation(v % f, w % f) : 0.0, corr(v, w));
            }
        }
    }
    return report;
}

MomentSpec reference_moment_spec(int n_roi, int n_features, std::uint64_t seed) {
    MomentSpec spec;
    spec.n_roi = n_roi;
    spec.n_features = n_features;
    spec.mode = CorrelationMode::block;
    const int d = n_roi * n_features;
    spec.correlation.resize(n_features, n_features);
    for (int i = 0; i < n_features; ++i)
        for (int j = 0; j < n_features; ++j) spec.correlation(i, j) = std::pow(0.4, std::abs(i - j));
    constexpr std::array<double, 8> skews = {0.0, 0.5, -0.3, 1.0, 0.2, -0.6, 0.8, 0.1};
    spec.skewness.resize(d);
    spec.kurtosis.resize(d);
    spec.range_min.resize(d);
    spec.range_max.resize(d);
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int v = 0; v < d; ++v) {
        const double s = skews[static_cast<std::size_t>(v % n_features) % skews.size()];
        spec.skewness(v) = s;
        spec.kurtosis(v) = 3.3 + 1.6 * s * s;
        spec.range_min(v) = 0.001 + 0.002 * u(rng);
        spec.range_max(v) = spec.range_min(v) + 0.004;
    }
    return spec;
}

}  // namespace radssl::sim
