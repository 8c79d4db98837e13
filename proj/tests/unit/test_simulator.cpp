#include "radssl/simulator.hpp"

#include <doctest.h>

#include <cmath>

using namespace radssl;
using namespace radssl::sim;

namespace {

MomentSpec small_spec(double rho = 0.5) {
    MomentSpec s;
    s.n_roi = 2;
    s.n_features = 2;
    s.correlation = Matrix::Identity(2, 2);
    s.correlation(0, 1) = s.correlation(1, 0) = rho;
    s.skewness = Vector::Zero(4);
    s.kurtosis = Vector::Constant(4, 3.0);
    s.range_min = Vector::Zero(4);
    s.range_max = Vector::Ones(4);
    return s;
}

// Textbook moments of one column.
struct Moments {
    double mean, m2, skew, kurt;
};

Moments moments(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d / n;
        m3 += d * d * d / n;
        m4 += d * d * d * d / n;
    }
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

std::vector<double> column(const Dataset& d, int roi, int feature) {
    std::vector<double> out;
    for (const auto& m : d.maps) out.push_back(m.values(roi, feature));
    return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ma = moments(a);
    const auto mb = moments(b);
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean) / static_cast<double>(a.size());
    return c / std::sqrt(ma.m2 * mb.m2);
}

}  // namespace

TEST_CASE("cubic transform reproduces the target moments") {
    const auto gauss = fit_cubic_transform(0.0, 3.0);
    CHECK(gauss.b == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(gauss.c) <= 1e-10);
    CHECK(std::abs(gauss.d) <= 1e-10);

    // Moments of Y = a + bZ + cZ^2 + dZ^3 by Gauss-Hermite quadrature.
    for (auto [skew, kurt] : {std::pair{1.0, 5.0}, std::pair{0.5, 3.8}, std::pair{-0.8, 4.5}, std::pair{0.0, 6.0}}) {
        const auto t = fit_cubic_transform(skew, kurt);
        CHECK(t.a == doctest::Approx(-t.c));
        // 1-d probabilists' Hermite quadrature via a fine Riemann sum.
        double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
        const double h = 1e-3;
        for (double z = -12; z <= 12; z += h) {
            const double w = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) * h;
            const double y = t(z);
            m1 += w * y;
            m2 += w * y * y;
            m3 += w * y * y * y;
            m4 += w * y * y * y * y;
        }
        CHECK(std::abs(m1) <= 1e-8);
        CHECK(m2 == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(m3 == doctest::Approx(skew).epsilon(1e-6));
        CHECK(m4 == doctest::Approx(kurt).epsilon(1e-6));
    }
    CHECK_THROWS_AS(fit_cubic_transform(2.0, 4.0), SimulationError);
}

TEST_CASE("intermediate correlation inverts the transformed correlation") {
    const auto t1 = fit_cubic_transform(1.0, 5.0);
    const auto t2 = fit_cubic_transform(-0.5, 4.0);
    for (double target : {-0.3, 0.0, 0.2, 0.5, 0.7}) {
        const double rho = intermediate_correlation(t1, t2, target);
        CHECK(transformed_correlation(t1, t2, rho) == doctest::Approx(target).epsilon(1e-8));
    }
    const auto id = fit_cubic_transform(0.0, 3.0);
    CHECK(intermediate_correlation(id, id, 0.4) == doctest::Approx(0.4).epsilon(1e-8));
}

TEST_CASE("moment estimation matches direct formulas") {
    Dataset d;
    const double vals[4][2] = {{1.0, 2.0}, {2.0, 4.5}, {4.0, 7.0}, {9.0, 1.0}};
    for (int i = 0; i < 4; ++i) {
        FeatureMap m;
        m.subject_id = "s" + std::to_string(i);
        m.values = Matrix(2, 1);
        m.values << vals[i][0], vals[i][1];
        m.roi_ids = {"r0", "r1"};
        m.feature_names = {"f"};
        d.maps.push_back(m);
    }
    const auto spec = estimate_moments(d, CorrelationMode::full);
    const auto c0 = moments(column(d, 0, 0));
    const auto c1 = moments(column(d, 1, 0));
    CHECK(spec.skewness(0) == doctest::Approx(c0.skew).epsilon(1e-12));
    CHECK(spec.kurtosis(1) == doctest::Approx(c1.kurt).epsilon(1e-12));
    CHECK(spec.correlation(0, 1) == doctest::Approx(correlation(column(d, 0, 0), column(d, 1, 0))).epsilon(1e-12));
    CHECK(spec.range_min(0) == 1.0);
    CHECK(spec.range_max(1) == 7.0);

    auto perfect = d;
    for (auto& m : perfect.maps) m.values(1, 0) = 3.0 * m.values(0, 0) - 1.0;
    CHECK(estimate_moments(perfect, CorrelationMode::full).correlation(0, 1) == doctest::Approx(1.0).epsilon(1e-9));

    auto constant = d;
    for (auto& m : constant.maps) m.values(1, 0) = 2.5;
    const auto cs = estimate_moments(constant, CorrelationMode::full);
    CHECK(cs.correlation(0, 1) == 0.0);
    CHECK_FALSE(cs.warnings.empty());

    Dataset two = d;
    two.maps.resize(2);
    CHECK_THROWS(estimate_moments(two));
}

TEST_CASE("symmetric marginals estimate near-zero skewness") {
    SimConfig cfg;
    cfg.n_samples = 4000;
    cfg.apply_separation = false;
    cfg.separated_rois = {0};
    cfg.noise_sd = 0.0;
    cfg.seed = 3;
    const auto d = generate(small_spec(0.0), cfg);
    const auto spec = estimate_moments(d);
    for (int v = 0; v < 4; ++v) CHECK(std::abs(spec.skewness(v)) <= 3.0 / std::sqrt(4000.0));
}

TEST_CASE("generation: labels, ranges, determinism") {
    SimConfig cfg;
    cfg.n_samples = 1000;
    cfg.separated_rois = {0};
    cfg.seed = 17;
    const auto spec = small_spec();
    const auto a = generate(spec, cfg);
    const auto b = generate(spec, cfg);
    REQUIRE(a.size() == 1000);
    int ones = 0;
    for (double y : *a.labels) ones += y == 1.0 ? 1 : 0;
    CHECK(ones == 500);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.maps[i].values == b.maps[i].values);
    CHECK(*a.labels == *b.labels);

    cfg.noise_sd = 0.0;
    cfg.apply_separation = false;
    cfg.separated_rois = {0};
    const auto clean = generate(spec, cfg);
    const auto col = column(clean, 1, 0);
    CHECK(*std::min_element(col.begin(), col.end()) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(*std::max_element(col.begin(), col.end()) == doctest::Approx(1.0).epsilon(1e-12));

    cfg.n_samples = 999;
    CHECK_THROWS_AS(generate(spec, cfg), SimulationError);
    cfg.n_samples = 10;
    cfg.separated_rois = {5};
    CHECK_THROWS_AS(generate(spec, cfg), SimulationError);
    cfg.separated_rois = {0};
    cfg.theta = 0.0;
    CHECK_THROWS_AS(generate(spec, cfg), SimulationError);

    auto bad = spec;
    bad.kurtosis(0) = 0.5;
    CHECK_THROWS_AS(bad.validate(), SimulationError);
    bad = spec;
    bad.correlation(0, 1) = bad.correlation(1, 0) = 1.5;
    CHECK_THROWS_AS(bad.validate(), SimulationError);
}

TEST_CASE("separation shifts only the selected ROIs, by mean / theta") {
    auto spec = small_spec();
    spec.range_min = Vector::Constant(4, 9.0);
    spec.range_max = Vector::Constant(4, 11.0);
    SimConfig cfg;
    cfg.n_samples = 1000;
    cfg.separated_rois = {1};
    cfg.noise_sd = 0.0;
    cfg.seed = 5;

    cfg.apply_separation = false;
    const auto base = generate(spec, cfg);
    for (double theta : {0.01, 100.0}) {
        cfg.apply_separation = true;
        cfg.theta = theta;
        const auto sep = generate(spec, cfg);
        CHECK(*sep.labels == *base.labels);
        for (int f = 0; f < 2; ++f) {
            const auto before = column(base, 1, f);
            const double fbar = moments(before).mean;
            double max_dev = 0.0;
            double diff = 0.0;
            for (std::size_t i = 0; i < sep.size(); ++i) {
                const double sign = (*sep.labels)[i] == 1.0 ? 1.0 : -1.0;
                max_dev = std::max(max_dev, std::abs(sep.maps[i].values(1, f) - (before[i] + sign * fbar / theta)));
                diff += sign * sep.maps[i].values(1, f) / 500.0;
                CHECK(sep.maps[i].values(0, f) == base.maps[i].values(0, f));
            }
            CHECK(max_dev <= 1e-9 * std::max(1.0, fbar / theta));
            // Class means differ by 2 fbar / theta plus the (noise-free) sampling difference.
            const double sampling = diff - 2.0 * fbar / theta;
            CHECK(diff > 0.0);
            CHECK(std::abs(sampling) <= 0.2);
        }
    }
    // theta = 100 and mean 10 give a per-class shift of 0.1.
    const auto fbar = moments(column(base, 1, 0)).mean;
    CHECK(fbar / 100.0 == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("verify_simulation accepts faithful samples and flags corrupted ones") {
    SimConfig cfg;
    cfg.n_samples = 5000;
    cfg.apply_separation = false;
    cfg.separated_rois = {0};
    cfg.noise_sd = 0.0;
    cfg.seed = 23;

    auto gauss = small_spec(0.0);
    CHECK(verify_simulation(generate(gauss, cfg), gauss).passed());

    auto skewed = small_spec(0.5);
    skewed.skewness(0) = 1.0;
    skewed.kurtosis(0) = 5.0;
    const auto data = generate(skewed, cfg);
    const auto report = verify_simulation(data, skewed);
    INFO("skew err " << report.max_skewness_error << " kurt err " << report.max_kurtosis_error << " corr err "
                     << report.max_correlation_error);
    CHECK(report.passed());

    auto corrupted = data;
    for (std::size_t i = 0; i < corrupted.size(); i += 2) corrupted.maps[i].values(1, 1) *= 40.0;
    const auto bad = verify_simulation(corrupted, skewed);
    CHECK_FALSE(bad.passed());
    bool names_variable = false;
    for (const auto& v : bad.violations) names_variable = names_variable || v.variable == 3 || v.other == 3;
    CHECK(names_variable);
}

TEST_CASE("full correlation mode") {
    MomentSpec s;
    s.n_roi = 2;
    s.n_features = 1;
    s.mode = CorrelationMode::full;
    s.correlation = Matrix::Identity(2, 2);
    s.correlation(0, 1) = s.correlation(1, 0) = -0.4;
    s.skewness = Vector::Zero(2);
    s.kurtosis = Vector::Constant(2, 3.0);
    s.range_min = Vector::Zero(2);
    s.range_max = Vector::Ones(2);
    SimConfig cfg;
    cfg.n_samples = 5000;
    cfg.apply_separation = false;
    cfg.separated_rois = {0};
    cfg.noise_sd = 0.0;
    cfg.seed = 2;
    const auto d = generate(s, cfg);
    CHECK(correlation(column(d, 0, 0), column(d, 1, 0)) == doctest::Approx(-0.4).epsilon(0.1));
    CHECK(verify_simulation(d, s).passed());
}

TEST_CASE("reference moment spec is valid and deterministic") {
    const auto a = reference_moment_spec(10, 8);
    const auto b = reference_moment_spec(10, 8);
    CHECK_NOTHROW(a.validate());
    CHECK(a.correlation == b.correlation);
    CHECK(a.skewness == b.skewness);
    CHECK(a.range_min.size() == 80);
    CHECK((a.range_max.array() > a.range_min.array()).all());
}
