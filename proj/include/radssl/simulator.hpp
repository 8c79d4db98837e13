#pragma once

// Synthetic labeled radiomic datasets with target correlation, skewness,
// kurtosis and per-variable ranges, plus a class-separation shift whose
// strength is set by theta (small theta = easy task).
//
// Variables are indexed v = roi * F + feature. Correlation is either one
// F x F block shared by every ROI (ROIs independent of each other) or a full
// D x D matrix, D = N_roi * F.

#include "radssl/augmentation.hpp"
#include "radssl/feature_map.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace radssl::sim {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CorrelationMode { block, full };

struct MomentSpec {
    int n_roi = 0;
    int n_features = 0;
    CorrelationMode mode = CorrelationMode::block;
    Matrix correlation;  // F x F (block) or D x D (full)
    Vector skewness;     // length D
    Vector kurtosis;     // length D, full (non-excess) kurtosis
    Vector range_min;    // length D
    Vector range_max;    // length D
    std::vector<std::string> warnings;

    [[nodiscard]] int n_variables() const { return n_roi * n_features; }
    void validate() const;
};

struct SimConfig {
    int n_samples = 500;
    double theta = 0.01;
    std::vector<int> separated_rois{0, 1, 2, 3, 4};
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
    // Off only for fidelity checks of the marginal/correlation pipeline.
    bool apply_separation = true;

    void validate(int n_roi) const;
};

// First `count` ROI indices.
std::vector<int> first_rois(int count);

// Sample correlation, skewness m3/m2^1.5, kurtosis m4/m2^2 and observed ranges.
// Constant variables get zero off-diagonal correlation, skewness 0, kurtosis 3
// and a warning. Block mode averages the per-ROI F x F correlations.
MomentSpec estimate_moments(const Dataset& dataset, CorrelationMode mode = CorrelationMode::block);

// Y = a + b Z + c Z^2 + d Z^3, a = -c, with Z standard normal and Y having
// mean 0, variance 1 and the requested skewness and (full) kurtosis.
struct CubicTransform {
    double a = 0.0;
    double b = 1.0;
    double c = 0.0;
    double d = 0.0;
    [[nodiscard]] double operator()(double z) const { return a + z * (b + z * (c + z * d)); }
};

CubicTransform fit_cubic_transform(double skewness, double kurtosis);

// Correlation of the transformed pair given Gaussian correlation rho.
double transformed_correlation(const CubicTransform& t1, const CubicTransform& t2, double rho);

// Gaussian correlation that yields `target` after the two transforms.
double intermediate_correlation(const CubicTransform& t1, const CubicTransform& t2, double target);

Dataset generate(const MomentSpec& spec, const SimConfig& config);

struct Tolerances {
    double skewness = 0.15;
    double kurtosis = 0.5;
    double correlation = 0.1;
};

struct Violation {
    std::string kind;  // "skewness", "kurtosis" or "correlation"
    int variable = 0;
    int other = -1;
    double target = 0.0;
    double achieved = 0.0;
};

struct SimulationReport {
    std::vector<Violation> violations;
    double max_skewness_error = 0.0;
    double max_kurtosis_error = 0.0;
    double max_correlation_error = 0.0;
    [[nodiscard]] bool passed() const { return violations.empty(); }
};

SimulationReport verify_simulation(const Dataset& generated, const MomentSpec& spec, Tolerances tol = {});

// Desk-scale reference moments: mildly skewed marginals, a banded F x F
// correlation block, and narrow positive ranges so that feature means are
// small next to unit Gaussian noise.
MomentSpec reference_moment_spec(int n_roi, int n_features, std::uint64_t seed = 2024);

}  // namespace radssl::sim
