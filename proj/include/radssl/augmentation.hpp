#pragma once

// Masked views of feature maps and subject-pair sampling for pretraining.

#include "radssl/feature_map.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace radssl {

using Rng = std::mt19937_64;

// Masked ROI rows are replaced by this value. In z-scored space it is the
// per-cell training mean.
inline constexpr double kMaskPlaceholder = 0.0;

struct MaskedView {
    std::string subject_id;
    int view_index = 0;               // 1..K
    std::vector<Eigen::Index> mask;   // sorted ROI row indices
    Matrix values;
};

// Two distinct subject indices in [0, m), uniform without replacement.
std::pair<std::size_t, std::size_t> sample_pair_indices(std::size_t m, Rng& rng);

std::pair<const FeatureMap*, const FeatureMap*> sample_pair(const Dataset& dataset, Rng& rng);

// Uniform k-subset of [0, n_roi).
std::vector<Eigen::Index> draw_mask(Eigen::Index n_roi, int k, Rng& rng);

MaskedView mask_rows(const FeatureMap& map, std::vector<Eigen::Index> mask, int view_index);

// `n_views` views, each with an independent uniformly drawn k-row mask.
std::vector<MaskedView> make_views(const FeatureMap& map, int k, int n_views, Rng& rng);

// Mask size for one pretraining step: uniform over [1, min(k_max, n_roi - 1)].
int draw_mask_count(int k_max, Eigen::Index n_roi, Rng& rng);

}  // namespace radssl
