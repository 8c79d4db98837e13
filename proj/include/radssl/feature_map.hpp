#pragma once

// Radiomic data model: one N_roi x F matrix per subject, a validated
// dataset container, the manifest/matrix text formats and per-cell
// z-score normalization.

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FeatureMap {
    std::string subject_id;
    Matrix values;  // rows = ROIs, columns = features
    std::vector<std::string> roi_ids;
    std::vector<std::string> feature_names;

    [[nodiscard]] Eigen::Index n_roi() const { return values.rows(); }
    [[nodiscard]] Eigen::Index n_features() const { return values.cols(); }

    // Throws DataError naming the subject on any invariant violation.
    void validate() const;
};

enum class SplitTag { train, validation, test };

struct Dataset {
    std::vector<FeatureMap> maps;
    std::optional<std::vector<double>> labels;
    std::optional<std::vector<SplitTag>> split_tags;

    [[nodiscard]] std::size_t size() const { return maps.size(); }
    [[nodiscard]] bool empty() const { return maps.empty(); }
    [[nodiscard]] bool has_labels() const { return labels.has_value(); }
    [[nodiscard]] Eigen::Index n_roi() const { return maps.empty() ? 0 : maps.front().n_roi(); }
    [[nodiscard]] Eigen::Index n_features() const { return maps.empty() ? 0 : maps.front().n_features(); }

    void validate() const;

    // Copy of the selected subjects, carrying labels and tags along.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
};

struct TextFormat {
    char delimiter = ',';
};

// Manifest: header row, then `subject_id, label_or_NA, relative_path` rows.
// Paths resolve relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path, TextFormat format = {});

// Writes `manifest.csv` and one matrix file per subject under `dir/subjects/`.
// Values use shortest round-trip decimal text, so a reload is bit-identical.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                                   TextFormat format = {});

FeatureMap read_feature_map(const std::filesystem::path& path, const std::string& subject_id,
                            TextFormat format = {});
void write_feature_map(const FeatureMap& map, const std::filesystem::path& path, TextFormat format = {});

// Per-(ROI, feature) cell statistics. Population standard deviation (divisor n).
struct NormalizationStats {
    Matrix mean;
    Matrix sd;
    std::vector<std::string> warnings;
    std::vector<std::string> fitted_on;  // subject ids the statistics were computed over

    [[nodiscard]] FeatureMap apply(const FeatureMap& map) const;
    [[nodiscard]] Dataset apply(const Dataset& dataset) const;
};

// Statistics come from subjects tagged `train` when split tags are present,
// otherwise from every subject. The whole dataset is transformed with them.
std::pair<Dataset, NormalizationStats> zscore_normalize(const Dataset& dataset);

}  // namespace radssl
