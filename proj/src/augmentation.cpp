#include "radssl/augmentation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace radssl {

std::pair<std::size_t, std::size_t> sample_pair_indices(std::size_t m, Rng& rng) {
    if (m < 2) throw std::invalid_argument("sample_pair: need at least 2 subjects, got " + std::to_string(m));
    std::uniform_int_distribution<std::size_t> first(0, m - 1);
    std::uniform_int_distribution<std::size_t> second(0, m - 2);
    const auto a = first(rng);
    auto b = second(rng);
    if (b >= a) ++b;
    return {a, b};
}

std::pair<const FeatureMap*, const FeatureMap*> sample_pair(const Dataset& dataset, Rng& rng) {
    const auto [a, b] = sample_pair_indices(dataset.size(), rng);
    return {&dataset.maps[a], &dataset.maps[b]};
}

std::vector<Eigen::Index> draw_mask(Eigen::Index n_roi, int k, Rng& rng) {
    if (k < 1 || k > n_roi - 1)
        throw std::invalid_argument("mask size k=" + std::to_string(k) + " outside [1, " + std::to_string(n_roi - 1) + "]");
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_roi));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    std::vector<Eigen::Index> mask;
    mask.reserve(static_cast<std::size_t>(k));
    std::sample(rows.begin(), rows.end(), std::back_inserter(mask), k, rng);
    return mask;
}

MaskedView mask_rows(const FeatureMap& map, std::vector<Eigen::Index> mask, int view_index) {
    MaskedView view;
    view.subject_id = map.subject_id;
    view.view_index = view_index;
    view.values = map.values;
    for (auto r : mask) view.values.row(r).setConstant(kMaskPlaceholder);
    view.mask = std::move(mask);
    return view;
}

std::vector<MaskedView> make_views(const FeatureMap& map, int k, int n_views, Rng& rng) {
    if (n_views < 1) throw std::invalid_argument("make_views: K must be >= 1");
    std::vector<MaskedView> views;
    views.reserve(static_cast<std::size_t>(n_views));
    for (int j = 1; j <= n_views; ++j) views.push_back(mask_rows(map, draw_mask(map.n_roi(), k, rng), j));
    return views;
}

int draw_mask_count(int k_max, Eigen::Index n_roi, Rng& rng) {
    const int hi = static_cast<int>(std::min<Eigen::Index>(k_max, n_roi - 1));
    if (hi < 1) throw std::invalid_argument("draw_mask_count: k_max and n_roi leave no valid mask size");
    return std::uniform_int_distribution<int>(1, hi)(rng);
}

}  // namespace radssl
