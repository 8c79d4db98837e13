#pragma once

// Flat key=value run configuration, results tables and reproducibility stamps.
//
//   # comment
//   epochs = 40
//   loss.beta = 0.5
//   data = runs/sim500
//
// Unknown keys and malformed values are errors. Every key has a default, so
// an empty file is a valid config.

#include "radssl/pipeline.hpp"
#include "radssl/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace radssl {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulationSettings {
    int n_roi = 87;
    int n_features = 100;
    int separated_rois = 5;  // the first this-many ROIs receive the class shift
    double noise_sd = 1.0;
    std::uint64_t spec_seed = 2024;
};

struct RunConfig {
    EncoderConfig encoder;
    TrainConfig train;
    SimulationSettings simulation;
    std::string data;          // dataset directory (manifest.csv + subjects/)
    std::string task = "auto";  // auto | classification | regression
    int folds = 10;
    int repetitions = 5;
    bool supervised_only = false;

    // Rejects unknown keys; values are parsed strictly.
    void set(std::string_view key, std::string_view value);
    [[nodiscard]] std::string get(std::string_view key) const;
    void validate() const;

    // Every key in a fixed order with its current value.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
    [[nodiscard]] std::string canonical_text() const;
    // FNV-1a over the canonical text, 16 hex digits.
    [[nodiscard]] std::string hash() const;
};

struct ConfigKey {
    std::string name;
    std::string help;
};

const std::vector<ConfigKey>& config_keys();

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

Task resolve_task(const RunConfig& config, const Dataset& dataset);

// Delimited results table: one row per (label, metric) with mean and SD.
void write_metrics_table(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, MetricsReport>>& rows);

// Per-fold metrics for a nested-CV run.
void write_fold_table(const std::filesystem::path& path, const CvResult& result);

std::string fnv1a_hex(std::string_view data);

}  // namespace radssl
