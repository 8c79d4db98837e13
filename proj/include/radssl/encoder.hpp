#pragma once

// Position-free Transformer encoder over ROI rows, with the reconstruction
// head used in pretraining and the downstream heads used in fine-tuning.
//
// Forward pass for one N_roi x d_model input X (one token per ROI row, no
// positional signal of any kind):
//
//   for each block:
//     X = LayerNorm(X + MultiHeadAttention(X))
//     X = LayerNorm(X + W2 relu(W1 X + b1) + b2)
//   A = LayerNorm(X + relu(X Wp + bp))         post-block projection, width d_model
//   E = A We + be                              per-ROI embedding, N_roi x d_embed
//   f = vec(E) / ||vec(E)||                    flattened row-major
//
// Reconstruction: relu(E Wr1 + br1) Wr2 + br2, N_roi x d_model.
//
// Parameter count for d = d_model, h = d_ff, e = d_embed, r = d_recon_hidden:
//
//   per block   4(d^2 + d) + 2d + (d h + h + h d + d) + 2d
//   projection  d^2 + d + 2d
//   embedding   d e + e
//   recon head  e r + r + r d + d
//
// which for the defaults (3 blocks, 8 heads, d = h = r = 100, e = 8) is 205108.
// The head count does not enter: heads partition the d-wide projections.

#include "radssl/augmentation.hpp"
#include "radssl/autodiff.hpp"
#include "radssl/feature_map.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace radssl {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EncoderConfig {
    int n_blocks = 3;
    int n_heads = 8;
    int d_model = 100;  // equals the feature count F
    int d_embed = 8;
    int d_recon_hidden = 100;
    int d_ff = 100;
    static constexpr bool use_position_encoding = false;

    void validate() const;
    // Heads split d_model into contiguous column blocks whose widths differ by
    // at most one; the first d_model % n_heads heads are one column wider.
    [[nodiscard]] int head_width(int head) const { return d_model / n_heads + (head < d_model % n_heads ? 1 : 0); }
    [[nodiscard]] int head_offset(int head) const {
        return head * (d_model / n_heads) + std::min(head, d_model % n_heads);
    }
    bool operator==(const EncoderConfig&) const = default;
};

struct ParamSlot {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    [[nodiscard]] Eigen::Index size() const { return rows * cols; }
};

class ParameterLayout {
public:
    void add(std::string name, Eigen::Index rows, Eigen::Index cols);
    [[nodiscard]] const ParamSlot& at(std::string_view name) const;
    [[nodiscard]] const std::vector<ParamSlot>& slots() const { return slots_; }
    [[nodiscard]] Eigen::Index total() const { return total_; }

private:
    std::vector<ParamSlot> slots_;
    std::unordered_map<std::string, std::size_t> index_;
    Eigen::Index total_ = 0;
};

ParameterLayout encoder_layout(const EncoderConfig& config);

struct EncoderState {
    EncoderConfig config;
    Vector parameters;

    // Config valid, parameter count matches its layout, all entries finite.
    void validate() const;
};

EncoderState init_encoder(const EncoderConfig& config, Rng& rng);

struct ViewEmbedding {
    Matrix per_roi;                     // N_roi x d_embed
    Eigen::RowVectorXd flat_normalized;  // length N_roi * d_embed, unit norm
};

ViewEmbedding encode(const EncoderState& state, const Matrix& x);
inline ViewEmbedding encode(const EncoderState& state, const MaskedView& view) { return encode(state, view.values); }
inline ViewEmbedding encode(const EncoderState& state, const FeatureMap& map) { return encode(state, map.values); }

Matrix reconstruct(const EncoderState& state, const ViewEmbedding& embedding);

// Puts a flat parameter vector on a tape, one leaf per slot, and gathers the
// leaf gradients back into flat form after a backward pass.
class ParameterBinding {
public:
    ParameterBinding(ad::Tape& tape, const ParameterLayout& layout, const Vector& values, bool trainable);

    [[nodiscard]] ad::Var operator[](std::string_view name) const;
    [[nodiscard]] Vector gradient() const;

private:
    const ParameterLayout* layout_;
    std::vector<ad::Var> leaves_;
};

struct EncoderGraph {
    ad::Var attention_map;    // N_roi x d_model, output of the post-block projection
    ad::Var per_roi;          // N_roi x d_embed
    ad::Var flat_normalized;  // 1 x (N_roi * d_embed)
};

EncoderGraph encode_graph(const ParameterBinding& params, const EncoderConfig& config, ad::Var x);
ad::Var reconstruct_graph(const ParameterBinding& params, ad::Var per_roi);

enum class Task { classification, regression };

Task parse_task(std::string_view name);
std::string_view to_string(Task task);

// Encoder plus a downstream head on the row-mean of the per-ROI embedding:
// hidden layer (relu) then 2 logits (classification) or 1 output (regression).
struct ModelState {
    EncoderState encoder;
    Task task = Task::classification;
    int d_head_hidden = 100;
    Vector head_parameters;
    // Regression targets are fitted in standardized units.
    double target_mean = 0.0;
    double target_scale = 1.0;

    [[nodiscard]] ParameterLayout head_layout() const;
};

ModelState attach_downstream_head(const EncoderState& encoder, Task task, Rng& rng, int d_head_hidden = 100);

// Output node: 1 x 2 class logits, or 1 x 1 standardized regression value.
ad::Var head_graph(const ParameterBinding& head, Task task, ad::Var per_roi);

// Class-1 probability (classification) or the prediction in label units.
double predict(const ModelState& model, const Matrix& x);
// Full 1 x 2 probability row, for classification models only.
Eigen::RowVector2d predict_proba(const ModelState& model, const Matrix& x);

// Text checkpoint: a versioned key=value header followed by one parameter per
// line in shortest round-trip decimal form, so reloading is lossless.
void save_checkpoint(const EncoderState& state, const std::filesystem::path& path);
EncoderState load_encoder_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_model_checkpoint(const std::filesystem::path& path);

}  // namespace radssl
