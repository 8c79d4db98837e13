#pragma once

// Pretraining, fine-tuning, nested cross-validation and ablation sweeps.

#include "radssl/encoder.hpp"
#include "radssl/losses.hpp"
#include "radssl/metrics.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace radssl {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TaskMode { both, recon_only, disc_only };
enum class ReconTarget { full, masked_rows };

TaskMode parse_task_mode(std::string_view name);
std::string_view to_string(TaskMode mode);
ReconTarget parse_recon_target(std::string_view name);
std::string_view to_string(ReconTarget target);

struct TrainConfig {
    int epochs = 500;           // pretraining epochs
    int finetune_epochs = 500;  // downstream epochs
    int batch_size = 8;
    double learning_rate = 1e-3;
    double weight_decay = 1e-3;
    LossWeights loss_weights;
    int k_max = 30;
    int n_views = 50;  // K
    std::optional<int> fixed_k;  // pins the mask size instead of drawing from [1, k_max]
    std::uint64_t seed = 0;
    TaskMode task_mode = TaskMode::both;
    ReconTarget recon_target = ReconTarget::full;
    double label_fraction = 1.0;
    int d_head_hidden = 100;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct PretrainResult {
    EncoderState encoder;
    std::vector<double> loss_history;  // mean step loss per epoch
};

// One epoch is ceil(M / batch_size) steps. Each step draws subject pairs until
// the batch is full, builds K masked views per subject with a shared mask size,
// and takes one AdamW step on the joint objective.
PretrainResult pretrain(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config);

// Same, continuing from an existing encoder.
PretrainResult pretrain_from(const Dataset& dataset, EncoderState encoder, const TrainConfig& config);

// Joint objective and its gradient for one batch of subjects; exposed for
// gradient checks.
struct BatchObjective {
    double recon = 0.0;
    double disc = 0.0;
    double total = 0.0;
    Vector gradient;
};

struct SubjectViews {
    const FeatureMap* source = nullptr;
    std::vector<MaskedView> views;
};

BatchObjective batch_objective(const EncoderState& encoder, std::span<const SubjectViews> batch,
                               const TrainConfig& config);

struct FinetuneResult {
    ModelState model;
    int best_epoch = 0;  // 1-based; equals the last epoch without a validation set
    std::vector<double> loss_history;
};

// Inverse-frequency class weights n / (2 n_c), indexed by class.
std::array<double, 2> class_weights(std::span<const double> labels);

// Supervised training on unmasked maps with all encoder parameters free.
// With a validation set, the returned model is the epoch with the best
// validation BA (classification) or MAE (regression); later epochs win ties.
FinetuneResult finetune(const EncoderState& encoder, const Dataset& train, Task task, const TrainConfig& config,
                        const Dataset* validation = nullptr);

std::vector<double> predict(const ModelState& model, const Dataset& dataset);

// Labels look binary when every value is 0 or 1.
Task infer_task(const Dataset& dataset);

struct FoldRecord {
    int repetition = 0;
    int fold = 0;
    MetricsReport metrics;
    int best_epoch = 0;
    std::vector<std::string> test_ids;
    std::vector<std::string> validation_ids;
    std::vector<std::string> pretrain_ids;
    std::vector<std::string> finetune_ids;
    std::vector<std::string> normalization_ids;
};

struct CvResult {
    MetricsReport summary;
    std::vector<FoldRecord> folds;  // ordered by (repetition, fold)
};

struct CvOptions {
    int folds = 10;
    int repetitions = 5;
    Task task = Task::classification;
    // Skip pretraining: fine-tune a freshly initialized encoder.
    bool supervised_only = false;
};

// Outer folds are stratified for classification. Inside each outer fold one
// inner split of the remaining subjects is held out for epoch selection.
// Normalization statistics use the inner training subjects; pretraining sees
// training and validation subjects; the test fold is touched only for scoring.
CvResult nested_cv(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config,
                   const CvOptions& options);

// Throws TrainingError naming the fold if any test subject was used for
// normalization, pretraining or fine-tuning, or if the test folds of a
// repetition fail to partition the dataset.
void check_no_leakage(const CvResult& result, const Dataset& dataset);

// Outer-fold assignment for one repetition: fold index per subject.
std::vector<int> assign_folds(std::span<const double> labels, int folds, Task task, std::uint64_t seed);

enum class SweepKind { beta, lambda, k, label_fraction, task_mode };

struct Sweep {
    SweepKind kind = SweepKind::beta;
    std::vector<double> values;      // every kind except task_mode
    std::vector<TaskMode> modes;     // task_mode only
};

SweepKind parse_sweep_kind(std::string_view name);
std::string_view to_string(SweepKind kind);

struct AblationRow {
    std::string parameter;
    std::string value;
    MetricsReport metrics;
};

// One nested-CV cycle per grid point, all with the same seed.
std::vector<AblationRow> ablate(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config,
                                const Sweep& sweep, const CvOptions& options);

// Mixes a base seed with stream identifiers into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

}  // namespace radssl
