#include "radssl/encoder.hpp"

#include "radssl/text.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace radssl {

void EncoderConfig::validate() const {
    if (n_blocks < 1 || n_heads < 1 || d_model < 1 || d_embed < 1 || d_recon_hidden < 1 || d_ff < 1)
        throw ModelError("encoder config: all dimensions must be >= 1");
    if (n_heads > d_model)
        throw ModelError("encoder config: n_heads=" + std::to_string(n_heads) + " exceeds d_model=" +
                         std::to_string(d_model));
}

void ParameterLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    index_.emplace(name, slots_.size());
    slots_.push_back(ParamSlot{std::move(name), total_, rows, cols});
    total_ += rows * cols;
}

const ParamSlot& ParameterLayout::at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ModelError("no parameter slot named '" + std::string(name) + "'");
    return slots_[it->second];
}

ParameterLayout encoder_layout(const EncoderConfig& config) {
    config.validate();
    const Eigen::Index d = config.d_model;
    ParameterLayout layout;
    for (int b = 0; b < config.n_blocks; ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        for (const char* w : {"q", "k", "v", "o"}) {
            layout.add(p + "attn.w" + w, d, d);
            layout.add(p + "attn.b" + w, 1, d);
        }
        layout.add(p + "ln1.gamma", 1, d);
        layout.add(p + "ln1.beta", 1, d);
        layout.add(p + "ff.w1", d, config.d_ff);
        layout.add(p + "ff.b1", 1, config.d_ff);
        layout.add(p + "ff.w2", config.d_ff, d);
        layout.add(p + "ff.b2", 1, d);
        layout.add(p + "ln2.gamma", 1, d);
        layout.add(p + "ln2.beta", 1, d);
    }
    layout.add("proj.w", d, d);
    layout.add("proj.b", 1, d);
    layout.add("proj_ln.gamma", 1, d);
    layout.add("proj_ln.beta", 1, d);
    layout.add("embed.w", d, config.d_embed);
    layout.add("embed.b", 1, config.d_embed);
    layout.add("recon.w1", config.d_embed, config.d_recon_hidden);
    layout.add("recon.b1", 1, config.d_recon_hidden);
    layout.add("recon.w2", config.d_recon_hidden, d);
    layout.add("recon.b2", 1, d);
    return layout;
}

void EncoderState::validate() const {
    config.validate();
    const auto expected = encoder_layout(config).total();
    if (parameters.size() != expected)
        throw ModelError("encoder state: " + std::to_string(parameters.size()) + " parameters, config needs " +
                         std::to_string(expected));
    if (!parameters.allFinite()) throw ModelError("encoder state: non-finite parameter");
}

namespace {

bool is_norm_scale(const std::string& name) { return name.ends_with(".gamma"); }
bool is_bias(const ParamSlot& slot) { return slot.rows == 1 && !is_norm_scale(slot.name); }

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases and norm offsets 0; norm scales 1.
void init_slots(const ParameterLayout& layout, Vector& params, Rng& rng) {
    params.setZero(layout.total());
    for (const auto& slot : layout.slots()) {
        auto block = params.segment(slot.offset, slot.size());
        if (is_norm_scale(slot.name)) {
            block.setOnes();
        } else if (!is_bias(slot)) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(slot.rows));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index i = 0; i < block.size(); ++i) block(i) = u(rng);
        }
    }
}

void check_finite(ad::Var v, const char* layer) {
    if (!v.value().allFinite()) throw ModelError(std::string("non-finite activation in layer ") + layer);
}

}  // namespace

EncoderState init_encoder(const EncoderConfig& config, Rng& rng) {
    EncoderState state{config, {}};
    init_slots(encoder_layout(config), state.parameters, rng);
    return state;
}

ParameterBinding::ParameterBinding(ad::Tape& tape, const ParameterLayout& layout, const Vector& values, bool trainable)
    : layout_(&layout) {
    if (values.size() != layout.total()) throw ModelError("parameter vector does not match layout");
    leaves_.reserve(layout.slots().size());
    for (const auto& slot : layout.slots()) {
        Matrix m = Eigen::Map<const Matrix>(values.data() + slot.offset, slot.rows, slot.cols);
        leaves_.push_back(trainable ? tape.variable(std::move(m)) : tape.constant(std::move(m)));
    }
}

ad::Var ParameterBinding::operator[](std::string_view name) const {
    const auto& slot = layout_->at(name);
    return leaves_[static_cast<std::size_t>(&slot - layout_->slots().data())];
}

Vector ParameterBinding::gradient() const {
    Vector g = Vector::Zero(layout_->total());
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        const auto& slot = layout_->slots()[i];
        const auto& lg = leaves_[i].grad();
        if (lg.size() == 0) continue;
        g.segment(slot.offset, slot.size()) = Eigen::Map<const Vector>(lg.data(), lg.size());
    }
    return g;
}

EncoderGraph encode_graph(const ParameterBinding& params, const EncoderConfig& config, ad::Var x) {
    if (x.cols() != config.d_model)
        throw ModelError("encode: input has " + std::to_string(x.cols()) + " columns, encoder expects d_model=" +
                         std::to_string(config.d_model));
    auto linear = [&](ad::Var in, const std::string& w, const std::string& b) {
        return ad::add_row(ad::matmul(in, params[w]), params[b]);
    };

    ad::Var h = x;
    for (int blk = 0; blk < config.n_blocks; ++blk) {
        const std::string p = "block" + std::to_string(blk) + ".";
        const auto q = linear(h, p + "attn.wq", p + "attn.bq");
        const auto k = linear(h, p + "attn.wk", p + "attn.bk");
        const auto v = linear(h, p + "attn.wv", p + "attn.bv");
        std::vector<ad::Var> heads;
        heads.reserve(static_cast<std::size_t>(config.n_heads));
        for (int hd = 0; hd < config.n_heads; ++hd) {
            const int off = config.head_offset(hd);
            const int dh = config.head_width(hd);
            const auto qh = ad::slice_cols(q, off, dh);
            const auto kh = ad::slice_cols(k, off, dh);
            const auto vh = ad::slice_cols(v, off, dh);
            const auto weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh))));
            heads.push_back(ad::matmul(weights, vh));
        }
        const auto attn = linear(ad::hcat(heads), p + "attn.wo", p + "attn.bo");
        h = ad::layer_norm_rows(ad::add(h, attn), params[p + "ln1.gamma"], params[p + "ln1.beta"]);
        check_finite(h, "attention");
        const auto ff = linear(ad::relu(linear(h, p + "ff.w1", p + "ff.b1")), p + "ff.w2", p + "ff.b2");
        h = ad::layer_norm_rows(ad::add(h, ff), params[p + "ln2.gamma"], params[p + "ln2.beta"]);
        check_finite(h, "feed-forward");
    }
    const auto proj = ad::relu(linear(h, "proj.w", "proj.b"));
    const auto attention_map = ad::layer_norm_rows(ad::add(h, proj), params["proj_ln.gamma"], params["proj_ln.beta"]);
    check_finite(attention_map, "projection");
    const auto per_roi = linear(attention_map, "embed.w", "embed.b");
    check_finite(per_roi, "embedding");
    return {attention_map, per_roi, ad::l2_normalize(per_roi)};
}

ad::Var reconstruct_graph(const ParameterBinding& params, ad::Var per_roi) {
    const auto hidden = ad::relu(ad::add_row(ad::matmul(per_roi, params["recon.w1"]), params["recon.b1"]));
    const auto out = ad::add_row(ad::matmul(hidden, params["recon.w2"]), params["recon.b2"]);
    check_finite(out, "reconstruction");
    return out;
}

ViewEmbedding encode(const EncoderState& state, const Matrix& x) {
    const auto layout = encoder_layout(state.config);
    ad::Tape tape;
    ParameterBinding params(tape, layout, state.parameters, false);
    const auto g = encode_graph(params, state.config, tape.constant(x));
    return {g.per_roi.value(), g.flat_normalized.value().row(0)};
}

Matrix reconstruct(const EncoderState& state, const ViewEmbedding& embedding) {
    if (embedding.per_roi.cols() != state.config.d_embed)
        throw ModelError("reconstruct: embedding width does not match encoder d_embed");
    const auto layout = encoder_layout(state.config);
    ad::Tape tape;
    ParameterBinding params(tape, layout, state.parameters, false);
    return reconstruct_graph(params, tape.constant(embedding.per_roi)).value();
}

Task parse_task(std::string_view name) {
    if (name == "classification") return Task::classification;
    if (name == "regression") return Task::regression;
    throw ModelError("unknown task '" + std::string(name) + "' (expected classification or regression)");
}

std::string_view to_string(Task task) { return task == Task::classification ? "classification" : "regression"; }

ParameterLayout ModelState::head_layout() const {
    ParameterLayout layout;
    layout.add("head.w1", encoder.config.d_embed, d_head_hidden);
    layout.add("head.b1", 1, d_head_hidden);
    const Eigen::Index out = task == Task::classification ? 2 : 1;
    layout.add("head.w2", d_head_hidden, out);
    layout.add("head.b2", 1, out);
    return layout;
}

ModelState attach_downstream_head(const EncoderState& encoder, Task task, Rng& rng, int d_head_hidden) {
    encoder.validate();
    if (d_head_hidden < 1) throw ModelError("downstream head needs at least 1 hidden unit");
    ModelState model;
    model.encoder = encoder;
    model.task = task;
    model.d_head_hidden = d_head_hidden;
    init_slots(model.head_layout(), model.head_parameters, rng);
    return model;
}

ad::Var head_graph(const ParameterBinding& head, Task /*task*/, ad::Var per_roi) {
    const auto pooled = ad::mean_rows(per_roi);
    const auto hidden = ad::relu(ad::add_row(ad::matmul(pooled, head["head.w1"]), head["head.b1"]));
    return ad::add_row(ad::matmul(hidden, head["head.w2"]), head["head.b2"]);
}

namespace {

Matrix model_output(const ModelState& model, const Matrix& x) {
    const auto enc_layout = encoder_layout(model.encoder.config);
    const auto head_layout = model.head_layout();
    ad::Tape tape;
    ParameterBinding enc(tape, enc_layout, model.encoder.parameters, false);
    ParameterBinding head(tape, head_layout, model.head_parameters, false);
    const auto g = encode_graph(enc, model.encoder.config, tape.constant(x));
    return head_graph(head, model.task, g.per_roi).value();
}

}  // namespace

Eigen::RowVector2d predict_proba(const ModelState& model, const Matrix& x) {
    if (model.task != Task::classification) throw ModelError("predict_proba: model is not a classifier");
    const Matrix logits = model_output(model, x);
    const double mx = logits.maxCoeff();
    Eigen::RowVector2d p((logits(0, 0) - mx), (logits(0, 1) - mx));
    p = p.array().exp().matrix();
    return p / p.sum();
}

double predict(const ModelState& model, const Matrix& x) {
    if (model.task == Task::classification) return predict_proba(model, x)(1);
    return model.target_mean + model.target_scale * model_output(model, x)(0, 0);
}

namespace {

constexpr std::string_view kMagic = "radssl-checkpoint v1";

void write_config(std::ostream& out, const EncoderConfig& c) {
    out << "n_blocks=" << c.n_blocks << '\n'
        << "n_heads=" << c.n_heads << '\n'
        << "d_model=" << c.d_model << '\n'
        << "d_embed=" << c.d_embed << '\n'
        << "d_recon_hidden=" << c.d_recon_hidden << '\n'
        << "d_ff=" << c.d_ff << '\n'
        << "use_position_encoding=false\n";
}

void write_values(std::ostream& out, const Vector& v) {
    out << "parameters=" << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << text::format_double(v(i)) << '\n';
}

struct RawCheckpoint {
    std::map<std::string, std::string, std::less<>> header;
    std::vector<Vector> blocks;
};

RawCheckpoint read_raw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kMagic)
        throw ModelError("checkpoint " + path.string() + ": missing '" + std::string(kMagic) + "' header");
    RawCheckpoint raw;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ModelError("checkpoint " + path.string() + ": malformed line '" + line + "'");
        auto key = std::string(text::trim(std::string_view(line).substr(0, eq)));
        auto val = std::string(text::trim(std::string_view(line).substr(eq + 1)));
        if (key != "parameters") {
            raw.header[key] = val;
            continue;
        }
        const auto n = text::parse_int(val);
        if (!n || *n < 0) throw ModelError("checkpoint " + path.string() + ": bad parameter count");
        Vector v(*n);
        for (long long i = 0; i < *n; ++i) {
            if (!std::getline(in, line)) throw ModelError("checkpoint " + path.string() + ": truncated parameters");
            const auto x = text::parse_double(line);
            if (!x) throw ModelError("checkpoint " + path.string() + ": bad value '" + line + "'");
            v(i) = *x;
        }
        raw.blocks.push_back(std::move(v));
    }
    return raw;
}

int header_int(const RawCheckpoint& raw, std::string_view key) {
    auto it = raw.header.find(key);
    if (it == raw.header.end()) throw ModelError("checkpoint: missing key '" + std::string(key) + "'");
    const auto v = text::parse_int(it->second);
    if (!v) throw ModelError("checkpoint: key '" + std::string(key) + "' is not an integer");
    return static_cast<int>(*v);
}

double header_double(const RawCheckpoint& raw, std::string_view key) {
    auto it = raw.header.find(key);
    if (it == raw.header.end()) throw ModelError("checkpoint: missing key '" + std::string(key) + "'");
    const auto v = text::parse_double(it->second);
    if (!v) throw ModelError("checkpoint: key '" + std::string(key) + "' is not a number");
    return *v;
}

EncoderState encoder_from(const RawCheckpoint& raw) {
    EncoderState s;
    s.config.n_blocks = header_int(raw, "n_blocks");
    s.config.n_heads = header_int(raw, "n_heads");
    s.config.d_model = header_int(raw, "d_model");
    s.config.d_embed = header_int(raw, "d_embed");
    s.config.d_recon_hidden = header_int(raw, "d_recon_hidden");
    s.config.d_ff = header_int(raw, "d_ff");
    if (auto it = raw.header.find("use_position_encoding"); it != raw.header.end() && it->second != "false")
        throw ModelError("checkpoint: positional encoding is not supported");
    if (raw.blocks.empty()) throw ModelError("checkpoint: no parameter block");
    s.parameters = raw.blocks.front();
    s.validate();
    return s;
}

}  // namespace

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path) {
    state.validate();
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write checkpoint " + path.string());
    out << kMagic << "\nkind=encoder\n";
    write_config(out, state.config);
    write_values(out, state.parameters);
}

EncoderState load_encoder_checkpoint(const std::filesystem::path& path) { return encoder_from(read_raw(path)); }

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
    model.encoder.validate();
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write checkpoint " + path.string());
    out << kMagic << "\nkind=model\n";
    write_config(out, model.encoder.config);
    out << "task=" << to_string(model.task) << '\n'
        << "d_head_hidden=" << model.d_head_hidden << '\n'
        << "target_mean=" << text::format_double(model.target_mean) << '\n'
        << "target_scale=" << text::format_double(model.target_scale) << '\n';
    write_values(out, model.encoder.parameters);
    write_values(out, model.head_parameters);
}

ModelState load_model_checkpoint(const std::filesystem::path& path) {
    const auto raw = read_raw(path);
    if (auto it = raw.header.find("kind"); it == raw.header.end() || it->second != "model")
        throw ModelError("checkpoint " + path.string() + " does not hold a downstream model");
    ModelState m;
    m.encoder = encoder_from(raw);
    m.task = parse_task(raw.header.at("task"));
    m.d_head_hidden = header_int(raw, "d_head_hidden");
    m.target_mean = header_double(raw, "target_mean");
    m.target_scale = header_double(raw, "target_scale");
    if (raw.blocks.size() != 2) throw ModelError("checkpoint: expected encoder and head parameter blocks");
    m.head_parameters = raw.blocks[1];
    if (m.head_parameters.size() != m.head_layout().total()) throw ModelError("checkpoint: head size mismatch");
    return m;
}

}  // namespace radssl
