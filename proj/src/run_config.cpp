#include "radssl/run_config.hpp"

#include "radssl/text.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace radssl {

namespace {

struct KeyOps {
    ConfigKey key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    if constexpr (std::is_floating_point_v<T>) {
        if (auto v = text::parse_double(value)) return *v;
    } else {
        if (auto v = text::parse_int(value)) {
            if constexpr (std::is_unsigned_v<T>) {
                if (*v >= 0) return static_cast<T>(*v);
            } else {
                return static_cast<T>(*v);
            }
        }
    }
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
}

bool parse_bool(std::string_view key, std::string_view value) {
    value = text::trim(value);
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(value) + "'");
}

template <typename T>
std::string show(T v) {
    if constexpr (std::is_floating_point_v<T>)
        return text::format_double(v);
    else
        return std::to_string(v);
}

#define RADSSL_NUMBER(NAME, FIELD, HELP)                                                              \
    KeyOps {                                                                                          \
        {NAME, HELP}, [](const RunConfig& c) { return show(c.FIELD); },                               \
            [](RunConfig& c, std::string_view v) { c.FIELD = parse_number<decltype(c.FIELD)>(NAME, v); } \
    }

const std::vector<KeyOps>& key_table() {
    static const std::vector<KeyOps> table = {
        {{"data", "dataset directory"},
         [](const RunConfig& c) { return c.data; },
         [](RunConfig& c, std::string_view v) { c.data = std::string(text::trim(v)); }},
        {{"task", "auto, classification or regression"},
         [](const RunConfig& c) { return c.task; },
         [](RunConfig& c, std::string_view v) {
             const auto t = std::string(text::trim(v));
             if (t != "auto") parse_task(t);
             c.task = t;
         }},
        RADSSL_NUMBER("folds", folds, "outer cross-validation folds"),
        RADSSL_NUMBER("repetitions", repetitions, "cross-validation repetitions"),
        {{"supervised_only", "skip pretraining"},
         [](const RunConfig& c) { return std::string(c.supervised_only ? "true" : "false"); },
         [](RunConfig& c, std::string_view v) { c.supervised_only = parse_bool("supervised_only", v); }},
        RADSSL_NUMBER("seed", train.seed, "base random seed"),
        RADSSL_NUMBER("epochs", train.epochs, "pretraining epochs"),
        RADSSL_NUMBER("finetune_epochs", train.finetune_epochs, "fine-tuning epochs"),
        RADSSL_NUMBER("batch_size", train.batch_size, "subjects per step"),
        RADSSL_NUMBER("learning_rate", train.learning_rate, "AdamW learning rate"),
        RADSSL_NUMBER("weight_decay", train.weight_decay, "decoupled weight decay"),
        RADSSL_NUMBER("k_max", train.k_max, "largest number of masked ROIs"),
        RADSSL_NUMBER("views", train.n_views, "masked views per subject (K)"),
        {{"fixed_k", "fixed number of masked ROIs, or 'none' to draw from [1, k_max]"},
         [](const RunConfig& c) { return c.train.fixed_k ? std::to_string(*c.train.fixed_k) : std::string("none"); },
         [](RunConfig& c, std::string_view v) {
             if (text::trim(v) == "none")
                 c.train.fixed_k.reset();
             else
                 c.train.fixed_k = parse_number<int>("fixed_k", v);
         }},
        {{"task_mode", "both, recon_only or disc_only"},
         [](const RunConfig& c) { return std::string(to_string(c.train.task_mode)); },
         [](RunConfig& c, std::string_view v) { c.train.task_mode = parse_task_mode(text::trim(v)); }},
        {{"recon_target", "full or masked_rows"},
         [](const RunConfig& c) { return std::string(to_string(c.train.recon_target)); },
         [](RunConfig& c, std::string_view v) { c.train.recon_target = parse_recon_target(text::trim(v)); }},
        RADSSL_NUMBER("label_fraction", train.label_fraction, "share of training labels used for fine-tuning"),
        RADSSL_NUMBER("threads", train.threads, "fold worker threads, 0 = all cores"),
        RADSSL_NUMBER("loss.beta", train.loss_weights.beta, "squared-error share of the reconstruction loss"),
        RADSSL_NUMBER("loss.lambda", train.loss_weights.lambda, "discrimination loss weight"),
        RADSSL_NUMBER("loss.tau", train.loss_weights.tau, "temperature"),
        RADSSL_NUMBER("model.blocks", encoder.n_blocks, "encoder blocks"),
        RADSSL_NUMBER("model.heads", encoder.n_heads, "attention heads"),
        RADSSL_NUMBER("model.d_model", encoder.d_model, "model width, equal to the feature count"),
        RADSSL_NUMBER("model.d_embed", encoder.d_embed, "per-ROI embedding width"),
        RADSSL_NUMBER("model.d_ff", encoder.d_ff, "feed-forward width"),
        RADSSL_NUMBER("model.d_recon_hidden", encoder.d_recon_hidden, "reconstruction head width"),
        RADSSL_NUMBER("model.d_head_hidden", train.d_head_hidden, "downstream head width"),
        RADSSL_NUMBER("sim.n_roi", simulation.n_roi, "simulated ROIs"),
        RADSSL_NUMBER("sim.n_features", simulation.n_features, "simulated features per ROI"),
        RADSSL_NUMBER("sim.separated_rois", simulation.separated_rois, "ROIs carrying the class shift"),
        RADSSL_NUMBER("sim.noise_sd", simulation.noise_sd, "additive Gaussian noise SD"),
        RADSSL_NUMBER("sim.spec_seed", simulation.spec_seed, "seed of the reference moment spec"),
    };
    return table;
}

#undef RADSSL_NUMBER

const KeyOps& find_key(std::string_view key) {
    for (const auto& k : key_table())
        if (k.key.name == key) return k;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& k : key_table()) out.push_back(k.key);
        return out;
    }();
    return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    try {
        find_key(text::trim(key)).set(*this, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config key '" + std::string(text::trim(key)) + "': " + e.what());
    }
}

std::string RunConfig::get(std::string_view key) const { return find_key(key).get(*this); }

void RunConfig::validate() const {
    encoder.validate();
    train.validate();
    if (folds < 3) throw ConfigError("folds must be >= 3");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (simulation.n_roi < 2 || simulation.n_features < 1) throw ConfigError("sim.n_roi must be >= 2 and sim.n_features >= 1");
    if (simulation.separated_rois < 0 || simulation.separated_rois > simulation.n_roi)
        throw ConfigError("sim.separated_rois must lie in [0, sim.n_roi]");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : key_table()) out.emplace_back(k.key.name, k.get(*this));
    return out;
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : entries()) out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical_text()); }

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_run_config(std::string_view body) {
    RunConfig config;
    std::istringstream in{std::string(body)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        auto view = text::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
        try {
            config.set(view.substr(0, eq), view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
        }
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    return parse_run_config(body.str());
}

Task resolve_task(const RunConfig& config, const Dataset& dataset) {
    return config.task == "auto" ? infer_task(dataset) : parse_task(config.task);
}

namespace {

void write_report_rows(std::ostream& out, const std::string& label, const MetricsReport& r) {
    auto row = [&](const char* name, const Stat& s) {
        out << label << ',' << name << ',' << text::format_double(s.mean) << ',' << text::format_double(s.sd) << ','
            << r.runs << '\n';
    };
    if (r.task == Task::classification) {
        row("ba", r.ba);
        row("sen", r.sen);
        row("spe", r.spe);
        row("auc", r.auc);
    } else {
        row("mae", r.mae);
        row("r2", r.r2);
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

}  // namespace

void write_metrics_table(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    auto out = open_out(path);
    out << "run,metric,mean,sd,n\n";
    for (const auto& [label, report] : rows) write_report_rows(out, label, report);
}

void write_fold_table(const std::filesystem::path& path, const CvResult& result) {
    auto out = open_out(path);
    const bool cls = result.summary.task == Task::classification;
    out << (cls ? "repetition,fold,best_epoch,ba,sen,spe,auc\n" : "repetition,fold,best_epoch,mae,r2\n");
    for (const auto& f : result.folds) {
        out << f.repetition << ',' << f.fold << ',' << f.best_epoch;
        if (cls)
            for (const auto* s : {&f.metrics.ba, &f.metrics.sen, &f.metrics.spe, &f.metrics.auc})
                out << ',' << text::format_double(s->mean);
        else
            for (const auto* s : {&f.metrics.mae, &f.metrics.r2}) out << ',' << text::format_double(s->mean);
        out << '\n';
    }
}

}  // namespace radssl
