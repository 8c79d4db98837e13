#include "radssl/feature_map.hpp"

#include "radssl/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace radssl {

namespace fs = std::filesystem;

void FeatureMap::validate() const {
    const auto where = [this] { return "subject '" + subject_id + "': "; };
    if (values.rows() < 2) throw DataError(where() + "need at least 2 ROIs, got " + std::to_string(values.rows()));
    if (values.cols() < 1) throw DataError(where() + "need at least 1 feature");
    if (static_cast<Eigen::Index>(roi_ids.size()) != values.rows())
        throw DataError(where() + "roi_ids length does not match matrix rows");
    if (static_cast<Eigen::Index>(feature_names.size()) != values.cols())
        throw DataError(where() + "feature_names length does not match matrix columns");
    std::unordered_set<std::string> seen;
    for (const auto& id : roi_ids)
        if (!seen.insert(id).second) throw DataError(where() + "duplicate roi id '" + id + "'");
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            if (!std::isfinite(values(r, c)))
                throw DataError(where() + "non-finite value at roi '" + roi_ids[static_cast<std::size_t>(r)] +
                                "', feature '" + feature_names[static_cast<std::size_t>(c)] + "'");
}

void Dataset::validate() const {
    if (maps.empty()) throw DataError("empty dataset");
    const auto& first = maps.front();
    std::unordered_set<std::string> ids;
    for (const auto& m : maps) {
        m.validate();
        if (!ids.insert(m.subject_id).second) throw DataError("duplicate subject_id '" + m.subject_id + "'");
        if (m.values.rows() != first.values.rows() || m.values.cols() != first.values.cols()) {
            std::ostringstream msg;
            msg << "subject '" << m.subject_id << "': shape " << m.values.rows() << "x" << m.values.cols()
                << " does not match " << first.values.rows() << "x" << first.values.cols() << " of subject '"
                << first.subject_id << "'";
            throw DataError(msg.str());
        }
        if (m.roi_ids != first.roi_ids) throw DataError("subject '" + m.subject_id + "': ROI order differs");
        if (m.feature_names != first.feature_names)
            throw DataError("subject '" + m.subject_id + "': feature names differ");
    }
    if (labels && labels->size() != maps.size()) throw DataError("label count does not match subject count");
    if (split_tags && split_tags->size() != maps.size()) throw DataError("split tag count does not match subject count");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.maps.reserve(indices.size());
    if (labels) out.labels.emplace();
    if (split_tags) out.split_tags.emplace();
    for (auto i : indices) {
        out.maps.push_back(maps.at(i));
        if (labels) out.labels->push_back((*labels)[i]);
        if (split_tags) out.split_tags->push_back((*split_tags)[i]);
    }
    return out;
}

FeatureMap read_feature_map(const fs::path& path, const std::string& subject_id, TextFormat format) {
    std::ifstream in(path);
    if (!in) throw DataError("subject '" + subject_id + "': cannot open matrix file " + path.string());
    FeatureMap map;
    map.subject_id = subject_id;
    std::string line;
    if (!std::getline(in, line)) throw DataError("subject '" + subject_id + "': empty matrix file " + path.string());
    auto header = text::split(line, format.delimiter);
    // The first header cell labels the ROI column and may be empty.
    for (std::size_t i = 1; i < header.size(); ++i) map.feature_names.emplace_back(header[i]);
    const auto n_feat = map.feature_names.size();

    std::vector<double> flat;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto cells = text::split(line, format.delimiter);
        if (cells.size() != n_feat + 1) {
            throw DataError("subject '" + subject_id + "': " + path.string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(n_feat + 1) + " cells, got " + std::to_string(cells.size()));
        }
        map.roi_ids.emplace_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto v = text::parse_double(cells[c]);
            if (!v) {
                throw DataError("subject '" + subject_id + "': " + path.string() + ":" + std::to_string(line_no) +
                                ": unparsable value '" + std::string(cells[c]) + "'");
            }
            if (!std::isfinite(*v)) {
                throw DataError("subject '" + subject_id + "': " + path.string() + ":" + std::to_string(line_no) +
                                ": non-finite value in column '" + map.feature_names[c - 1] + "'");
            }
            flat.push_back(*v);
        }
    }
    const auto n_roi = map.roi_ids.size();
    map.values.resize(static_cast<Eigen::Index>(n_roi), static_cast<Eigen::Index>(n_feat));
    for (std::size_t r = 0; r < n_roi; ++r)
        for (std::size_t c = 0; c < n_feat; ++c)
            map.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * n_feat + c];
    map.validate();
    return map;
}

void write_feature_map(const FeatureMap& map, const fs::path& path, TextFormat format) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write matrix file " + path.string());
    out << "roi";
    for (const auto& name : map.feature_names) out << format.delimiter << name;
    out << '\n';
    for (Eigen::Index r = 0; r < map.values.rows(); ++r) {
        out << map.roi_ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < map.values.cols(); ++c) out << format.delimiter << text::format_double(map.values(r, c));
        out << '\n';
    }
}

Dataset load_dataset(const fs::path& manifest_path, TextFormat format) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path.string());
    const auto base = manifest_path.parent_path();
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset");

    Dataset d;
    std::vector<std::optional<double>> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto cells = text::split(line, format.delimiter);
        if (cells.size() != 3) {
            throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                            ": expected subject_id, label_or_NA, relative_path");
        }
        const std::string subject(cells[0]);
        std::optional<double> label;
        if (cells[1] != "NA" && !cells[1].empty()) {
            label = text::parse_double(cells[1]);
            if (!label || !std::isfinite(*label))
                throw DataError("subject '" + subject + "': bad label '" + std::string(cells[1]) + "'");
        }
        labels.push_back(label);
        d.maps.push_back(read_feature_map(base / fs::path(std::string(cells[2])), subject, format));
    }
    if (d.maps.empty()) throw DataError("empty dataset");

    const auto n_labeled = std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
    if (n_labeled == static_cast<long>(labels.size())) {
        d.labels.emplace();
        for (const auto& l : labels) d.labels->push_back(*l);
    } else if (n_labeled != 0) {
        throw DataError("labels must be given for every subject or for none");
    }
    d.validate();
    return d;
}

fs::path save_dataset(const Dataset& dataset, const fs::path& dir, TextFormat format) {
    dataset.validate();
    fs::create_directories(dir / "subjects");
    const auto manifest = dir / "manifest.csv";
    std::ofstream out(manifest);
    if (!out) throw DataError("cannot write manifest " + manifest.string());
    out << "subject_id" << format.delimiter << "label" << format.delimiter << "path\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& m = dataset.maps[i];
        const auto rel = fs::path("subjects") / (m.subject_id + ".csv");
        write_feature_map(m, dir / rel, format);
        out << m.subject_id << format.delimiter
            << (dataset.labels ? text::format_double((*dataset.labels)[i]) : std::string("NA")) << format.delimiter
            << rel.generic_string() << '\n';
    }
    return manifest;
}

FeatureMap NormalizationStats::apply(const FeatureMap& map) const {
    if (map.values.rows() != mean.rows() || map.values.cols() != mean.cols())
        throw DataError("subject '" + map.subject_id + "': shape does not match normalization statistics");
    FeatureMap out = map;
    out.values = ((map.values - mean).array() / sd.array()).matrix();
    return out;
}

Dataset NormalizationStats::apply(const Dataset& dataset) const {
    Dataset out = dataset;
    for (auto& m : out.maps) m = apply(m);
    return out;
}

std::pair<Dataset, NormalizationStats> zscore_normalize(const Dataset& dataset) {
    dataset.validate();
    std::vector<std::size_t> fit;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (!dataset.split_tags || (*dataset.split_tags)[i] == SplitTag::train) fit.push_back(i);
    if (fit.size() < 2) throw DataError("normalization needs at least 2 training subjects");

    const auto rows = dataset.n_roi();
    const auto cols = dataset.n_features();
    NormalizationStats stats;
    stats.mean = Matrix::Zero(rows, cols);
    stats.sd = Matrix::Zero(rows, cols);
    for (auto i : fit) {
        stats.mean += dataset.maps[i].values;
        stats.fitted_on.push_back(dataset.maps[i].subject_id);
    }
    const double n = static_cast<double>(fit.size());
    stats.mean /= n;
    for (auto i : fit) stats.sd += (dataset.maps[i].values - stats.mean).cwiseAbs2();
    stats.sd = (stats.sd / n).cwiseSqrt();

    const auto& ref = dataset.maps.front();
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double scale = std::max(1.0, std::abs(stats.mean(r, c)));
            if (stats.sd(r, c) <= 1e-12 * scale) {
                stats.sd(r, c) = 1.0;
                stats.warnings.push_back("zero variance at roi '" + ref.roi_ids[static_cast<std::size_t>(r)] +
                                         "', feature '" + ref.feature_names[static_cast<std::size_t>(c)] +
                                         "'; centered only");
            }
        }
    }
    return {stats.apply(dataset), std::move(stats)};
}

}  // namespace radssl
