#include "radssl/pipeline.hpp"
#include "radssl/run_config.hpp"
#include "radssl/simulator.hpp"
#include "radssl/text.hpp"
#include "radssl/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace radssl;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::string config_path;
    std::string out = "radssl_out";
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> overrides;

    // simulate
    int n = 500;
    double theta = 0.01;
    // finetune
    std::string encoder_path;
    // evaluate
    std::vector<int> sizes;
    // ablate
    std::string sweep = "beta";
    std::vector<std::string> grid;
    // verify
    int trials = 1000;
};

void add_config_options(Command& cmd, const std::vector<std::string>& keys) {
    const RunConfig defaults;
    for (const auto& k : config_keys()) {
        if (!keys.empty() && std::find(keys.begin(), keys.end(), k.name) == keys.end()) continue;
        auto* opt = cmd.app->add_option("--" + k.name, cmd.values[k.name], k.help)->default_str(defaults.get(k.name));
        cmd.overrides.emplace_back(k.name, opt);
    }
}

void add_common(Command& cmd) {
    cmd.app->add_option("--config", cmd.config_path, "run config file (key=value lines)");
    cmd.app->add_option("--out", cmd.out, "output directory")->capture_default_str();
}

RunConfig resolve_config(const Command& cmd) {
    RunConfig config = cmd.config_path.empty() ? RunConfig{} : load_run_config(cmd.config_path);
    for (const auto& [key, opt] : cmd.overrides)
        if (opt->count() > 0) config.set(key, cmd.values.at(key));
    config.validate();
    return config;
}

Dataset load_data(const RunConfig& config) {
    if (config.data.empty()) throw UsageError("--data is required (dataset directory or manifest file)");
    fs::path path = config.data;
    if (fs::is_directory(path)) path /= "manifest.csv";
    if (!fs::exists(path)) throw UsageError("--data: no dataset at '" + config.data + "'");
    return load_dataset(path);
}

CvOptions cv_options(const RunConfig& config, Task task) {
    CvOptions o;
    o.folds = config.folds;
    o.repetitions = config.repetitions;
    o.task = task;
    o.supervised_only = config.supervised_only;
    return o;
}

// Stratified subsample of `n` subjects, deterministic in `seed`.
Dataset subsample(const Dataset& d, int n, Task task, std::uint64_t seed) {
    if (n < 2 || static_cast<std::size_t>(n) > d.size())
        throw UsageError("--sizes: " + std::to_string(n) + " is outside [2, " + std::to_string(d.size()) + "]");
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> strata(2);
    for (std::size_t i = 0; i < d.size(); ++i)
        strata[task == Task::classification && (*d.labels)[i] > 0.5 ? 1 : 0].push_back(i);
    std::vector<std::size_t> keep;
    std::size_t remaining = static_cast<std::size_t>(n);
    std::size_t left = d.size();
    for (auto& s : strata) {
        std::shuffle(s.begin(), s.end(), rng);
        const auto take = std::min(s.size(), static_cast<std::size_t>(std::llround(
                                                 static_cast<double>(remaining) * static_cast<double>(s.size()) /
                                                 static_cast<double>(std::max<std::size_t>(left, 1)))));
        keep.insert(keep.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(take));
        remaining -= take;
        left -= s.size();
    }
    std::sort(keep.begin(), keep.end());
    return d.subset(keep);
}

void write_loss_history(const fs::path& path, const std::vector<double>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) out << i + 1 << ',' << text::format_double(history[i]) << '\n';
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

using Emitted = std::vector<std::pair<std::string, fs::path>>;

int run_simulate(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto& s = config.simulation;
    const auto spec = sim::reference_moment_spec(s.n_roi, s.n_features, s.spec_seed);
    sim::SimConfig sc;
    sc.n_samples = cmd.n;
    sc.theta = cmd.theta;
    sc.separated_rois = sim::first_rois(s.separated_rois);
    sc.noise_sd = s.noise_sd;
    sc.seed = config.train.seed;
    const auto dataset = sim::generate(spec, sc);
    emitted.emplace_back("dataset", save_dataset(dataset, cmd.out));
    std::cerr << "simulated " << dataset.size() << " subjects (" << s.n_roi << " ROIs x " << s.n_features
              << " features) into " << cmd.out << "\n";
    return 0;
}

int run_pretrain(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto raw = load_data(config);
    const auto [data, stats] = zscore_normalize(raw);
    for (const auto& w : stats.warnings) std::cerr << "warning: " << w << "\n";
    const auto result = pretrain(data, config.encoder, config.train);
    const auto ckpt = fs::path(cmd.out) / "encoder.ckpt";
    save_checkpoint(result.encoder, ckpt);
    emitted.emplace_back("encoder_checkpoint", ckpt);
    const auto hist = fs::path(cmd.out) / "pretrain_loss.csv";
    write_loss_history(hist, result.loss_history);
    emitted.emplace_back("loss_history", hist);
    std::cerr << "pretrained " << result.loss_history.size() << " epochs, final loss "
              << text::format_double(result.loss_history.back()) << "\n";
    return 0;
}

int run_finetune(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto raw = load_data(config);
    if (!raw.labels) throw UsageError("--data: finetune needs a labeled dataset");
    const auto task = resolve_task(config, raw);
    const auto [data, stats] = zscore_normalize(raw);
    EncoderState encoder;
    if (!cmd.encoder_path.empty()) {
        encoder = load_encoder_checkpoint(cmd.encoder_path);
    } else {
        Rng rng(derive_seed(config.train.seed, {0}));
        encoder = init_encoder(config.encoder, rng);
    }
    const auto result = finetune(encoder, data, task, config.train);
    const auto ckpt = fs::path(cmd.out) / "model.ckpt";
    save_checkpoint(result.model, ckpt);
    emitted.emplace_back("model_checkpoint", ckpt);
    const auto hist = fs::path(cmd.out) / "finetune_loss.csv";
    write_loss_history(hist, result.loss_history);
    emitted.emplace_back("loss_history", hist);
    const auto metrics_path = fs::path(cmd.out) / "metrics.csv";
    write_metrics_table(metrics_path, {{"train", evaluate(predict(result.model, data), *raw.labels, task)}});
    emitted.emplace_back("metrics", metrics_path);
    return 0;
}

int run_evaluate(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto raw = load_data(config);
    if (!raw.labels) throw UsageError("--data: evaluate needs a labeled dataset");
    const auto task = resolve_task(config, raw);
    const auto options = cv_options(config, task);

    std::vector<std::pair<std::string, MetricsReport>> rows;
    std::vector<std::pair<int, MetricsReport>> curve;
    auto run_one = [&](const Dataset& d, const std::string& label) {
        const auto result = nested_cv(d, config.encoder, config.train, options);
        check_no_leakage(result, d);
        const auto folds_path = fs::path(cmd.out) / ("folds_" + label + ".csv");
        write_fold_table(folds_path, result);
        emitted.emplace_back("folds", folds_path);
        rows.emplace_back(label, result.summary);
        std::cerr << label << ": " << (task == Task::classification ? "AUC " : "MAE ")
                  << text::format_double(task == Task::classification ? result.summary.auc.mean : result.summary.mae.mean)
                  << "\n";
        return result.summary;
    };
    if (cmd.sizes.empty()) {
        run_one(raw, "all");
    } else {
        for (int n : cmd.sizes) {
            const auto d = subsample(raw, n, task, derive_seed(config.train.seed, {static_cast<std::uint64_t>(n)}));
            curve.emplace_back(n, run_one(d, "n" + std::to_string(n)));
        }
        const auto plot = fs::path(cmd.out) / "plot_metric_vs_n.csv";
        std::ofstream out(plot);
        out << "n," << (task == Task::classification ? "auc_mean,auc_sd" : "mae_mean,mae_sd") << "\n";
        for (const auto& [n, m] : curve) {
            const auto& s = task == Task::classification ? m.auc : m.mae;
            out << n << ',' << text::format_double(s.mean) << ',' << text::format_double(s.sd) << '\n';
        }
        emitted.emplace_back("plot_data", plot);
    }
    const auto metrics_path = fs::path(cmd.out) / "metrics.csv";
    write_metrics_table(metrics_path, rows);
    emitted.emplace_back("metrics", metrics_path);
    return 0;
}

int run_ablate(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto raw = load_data(config);
    if (!raw.labels) throw UsageError("--data: ablate needs a labeled dataset");
    const auto task = resolve_task(config, raw);
    Sweep sweep;
    sweep.kind = parse_sweep_kind(cmd.sweep);
    if (cmd.grid.empty()) throw UsageError("--grid: empty grid");
    for (const auto& g : cmd.grid) {
        if (sweep.kind == SweepKind::task_mode) {
            sweep.modes.push_back(parse_task_mode(g));
        } else {
            const auto v = text::parse_double(g);
            if (!v) throw UsageError("--grid: cannot parse '" + g + "'");
            sweep.values.push_back(*v);
        }
    }
    const auto rows = ablate(raw, config.encoder, config.train, sweep, cv_options(config, task));

    std::vector<std::pair<std::string, MetricsReport>> table;
    for (const auto& r : rows) table.emplace_back(r.parameter + "=" + r.value, r.metrics);
    const auto metrics_path = fs::path(cmd.out) / "ablation.csv";
    write_metrics_table(metrics_path, table);
    emitted.emplace_back("metrics", metrics_path);

    const auto plot = fs::path(cmd.out) / ("plot_" + cmd.sweep + ".csv");
    std::ofstream out(plot);
    out << cmd.sweep << ',' << (task == Task::classification ? "auc_mean,auc_sd" : "mae_mean,mae_sd") << "\n";
    for (const auto& r : rows) {
        const auto& s = task == Task::classification ? r.metrics.auc : r.metrics.mae;
        out << r.value << ',' << text::format_double(s.mean) << ',' << text::format_double(s.sd) << '\n';
    }
    emitted.emplace_back("plot_data", plot);
    return 0;
}

int run_verify(const Command& cmd, const RunConfig& config, Emitted& emitted) {
    const auto checks = run_verify_suite(config.train.seed, cmd.trials);
    const auto report_path = fs::path(cmd.out) / "verify.txt";
    std::ofstream report(report_path);
    int failed = 0;
    for (const auto& c : checks) {
        char line[256];
        std::snprintf(line, sizeof(line), "%s  %-70s max deviation %.3e (tolerance %.1e)", c.passed ? "PASS" : "FAIL",
                      c.name.c_str(), c.max_deviation, c.tolerance);
        std::cout << line << "\n";
        report << line << "\n";
        failed += c.passed ? 0 : 1;
    }
    std::cout << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
    emitted.emplace_back("report", report_path);
    return failed == 0 ? 0 : 1;
}

void write_manifest(const Command& cmd, const RunConfig* config, const Emitted& emitted, const std::string& started,
                    int status, const std::string& error) {
    nlohmann::ordered_json m;
    m["subcommand"] = cmd.name;
    m["config_path"] = cmd.config_path;
    m["output_dir"] = cmd.out;
    if (config) {
        m["seed"] = config->train.seed;
        m["config_hash"] = config->hash();
        nlohmann::ordered_json c;
        for (const auto& [k, v] : config->entries()) c[k] = v;
        m["config"] = c;
    }
    m["emitted_files"] = nlohmann::json::array();
    for (const auto& [role, path] : emitted) m["emitted_files"].push_back({{"role", role}, {"path", path.string()}});
    m["exit_status"] = status;
    if (!error.empty()) m["error"] = error;
    m["started_at"] = started;
    m["finished_at"] = timestamp();
    std::ofstream out(fs::path(cmd.out) / "run_manifest.json");
    out << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised pretraining and evaluation for radiomic feature maps"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& description) -> Command& {
        auto cmd = std::make_unique<Command>();
        cmd->name = name;
        cmd->app = app.add_subcommand(name, description);
        add_common(*cmd);
        commands.push_back(std::move(cmd));
        return *commands.back();
    };

    auto& simulate = make("simulate", "generate a labeled synthetic dataset");
    simulate.app->add_option("--n", simulate.n, "number of subjects")->capture_default_str()->check(CLI::PositiveNumber);
    simulate.app->add_option("--theta", simulate.theta, "separation strength; small is easy")->capture_default_str();
    add_config_options(simulate, {"seed", "sim.n_roi", "sim.n_features", "sim.separated_rois", "sim.noise_sd", "sim.spec_seed"});

    auto& pre = make("pretrain", "pretrain an encoder on unlabeled feature maps");
    add_config_options(pre, {});

    auto& fine = make("finetune", "fine-tune an encoder on all labeled subjects");
    fine.app->add_option("--encoder", fine.encoder_path, "encoder checkpoint (default: fresh initialization)");
    add_config_options(fine, {});

    auto& eval = make("evaluate", "nested cross-validation with pretraining inside each fold");
    eval.app->add_option("--sizes", eval.sizes, "subsample sizes for a metric-vs-N curve (default: whole dataset)");
    add_config_options(eval, {});

    auto& abl = make("ablate", "nested cross-validation over a parameter grid");
    abl.app->add_option("--sweep", abl.sweep, "beta, lambda, k, label_fraction or task_mode")->capture_default_str();
    abl.app->add_option("--grid", abl.grid, "grid values, e.g. 0,0.5,1 or both,recon_only,disc_only")->delimiter(',');
    add_config_options(abl, {});

    auto& ver = make("verify", "run the divergence and loss property suite");
    ver.app->add_option("--trials", ver.trials, "random trials per identity")->capture_default_str()->check(CLI::PositiveNumber);
    add_config_options(ver, {"seed"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    Command* cmd = nullptr;
    for (auto& c : commands)
        if (c->app->parsed()) cmd = c.get();

    const auto started = timestamp();
    std::optional<RunConfig> config;
    Emitted emitted;
    int status = 1;
    std::string error;
    try {
        config = resolve_config(*cmd);
        fs::create_directories(cmd->out);
        if (cmd->name == "simulate") status = run_simulate(*cmd, *config, emitted);
        else if (cmd->name == "pretrain") status = run_pretrain(*cmd, *config, emitted);
        else if (cmd->name == "finetune") status = run_finetune(*cmd, *config, emitted);
        else if (cmd->name == "evaluate") status = run_evaluate(*cmd, *config, emitted);
        else if (cmd->name == "ablate") status = run_ablate(*cmd, *config, emitted);
        else status = run_verify(*cmd, *config, emitted);
    } catch (const UsageError& e) {
        error = e.what();
        std::cerr << "radssl " << cmd->name << ": error: " << error << "\n" << cmd->app->help();
        status = 2;
    } catch (const std::exception& e) {
        error = e.what();
        std::cerr << "radssl " << cmd->name << ": error: " << error << "\n";
        status = 1;
    }
    std::error_code ec;
    if (fs::is_directory(cmd->out, ec)) write_manifest(*cmd, config ? &*config : nullptr, emitted, started, status, error);
    return status;
}
