// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only 1,5,7] [--config configs/desk.cfg]

#include "oracles.hpp"

#include "radssl/bregman.hpp"
#include "radssl/run_config.hpp"
#include "radssl/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace radssl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool passed = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double x, int digits = 3) {
    std::ostringstream out;
    out.precision(digits);
    out << std::fixed << x;
    return out.str();
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", x);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s + "]";
}

// ---- simulation study -------------------------------------------------------

constexpr std::array<std::uint64_t, 5> kSeeds{1, 2, 3, 4, 5};

class Study {
public:
    explicit Study(RunConfig config)
        : config_(std::move(config)),
          spec_(sim::reference_moment_spec(config_.simulation.n_roi, config_.simulation.n_features,
                                           config_.simulation.spec_seed)) {}

    Dataset simulate(int n, double theta, std::uint64_t seed) const {
        sim::SimConfig sc;
        sc.n_samples = n;
        sc.theta = theta;
        sc.separated_rois = sim::first_rois(config_.simulation.separated_rois);
        sc.noise_sd = config_.simulation.noise_sd;
        sc.seed = derive_seed(seed, {static_cast<std::uint64_t>(n), 77});
        return sim::generate(spec_, sc);
    }

    CvResult run(int n, double theta, TaskMode mode, std::uint64_t seed) const {
        auto train = config_.train;
        train.task_mode = mode;
        train.seed = seed;
        CvOptions o;
        o.folds = config_.folds;
        o.repetitions = config_.repetitions;
        o.task = Task::classification;
        const auto data = simulate(n, theta, seed);
        auto result = nested_cv(data, config_.encoder, train, o);
        check_no_leakage(result, data);
        return result;
    }

    // Test AUC per seed, cached across criteria.
    std::vector<double> aucs(int n, double theta, TaskMode mode) {
        const auto key = std::make_tuple(n, theta, mode);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        std::vector<double> out;
        for (auto seed : kSeeds) {
            const auto t0 = Clock::now();
            out.push_back(run(n, theta, mode, seed).summary.auc.mean);
            std::cerr << "  N=" << n << " theta=" << theta << " " << to_string(mode) << " seed=" << seed
                      << " auc=" << fmt(out.back()) << " (" << fmt(seconds_since(t0), 1) << " s)\n";
        }
        cache_[key] = out;
        return out;
    }

    const RunConfig& config() const { return config_; }

private:
    RunConfig config_;
    sim::MomentSpec spec_;
    std::map<std::tuple<int, double, TaskMode>, std::vector<double>> cache_;
};

// ---- criteria ---------------------------------------------------------------

Outcome divergence_suite() {
    const auto t0 = Clock::now();
    Rng rng(101);
    const auto sq = bregman::verify_squared_norm_identity(1000, rng);
    const auto en = bregman::verify_entropy_identity(1000, rng);
    double js_min = 1.0, js_max = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int dim = 2 + t % 30;
        const double js = js_div(ProbVector(bregman::random_simplex(dim, rng)), ProbVector(bregman::random_simplex(dim, rng)));
        js_min = std::min(js_min, js);
        js_max = std::max(js_max, js);
    }
    // Disjoint supports reach the upper bound.
    const double vertex = js_div(ProbVector(Vector{{1.0, 0.0}}), ProbVector(Vector{{0.0, 1.0}}));
    const double elapsed = seconds_since(t0);
    const bool ok = sq.max_deviation <= 1e-10 && en.max_deviation <= 1e-10 && js_min >= 0.0 &&
                    js_max <= std::log(2.0) && std::abs(vertex - std::log(2.0)) <= 1e-15 && elapsed < 10.0;
    return {ok, "squared-norm dev " + sci(sq.max_deviation) + ", entropy dev " +
                    sci(en.max_deviation) + ", js in [" + fmt(js_min, 4) + ", " + fmt(js_max, 4) +
                    "], " + fmt(elapsed, 2) + " s"};
}

Outcome gradient_checks() {
    const auto t0 = Clock::now();
    const auto toy = oracle::make_toy_batch(2024);
    double worst = 0.0;
    std::string detail;
    for (auto mode : {TaskMode::recon_only, TaskMode::disc_only, TaskMode::both}) {
        TrainConfig c;
        c.n_views = 2;
        c.task_mode = mode;
        const auto r = oracle::check_objective_gradient(toy, c);
        worst = std::max(worst, r.max_relative_error);
        detail += std::string(to_string(mode)) + " " + sci(r.max_relative_error) + " over " +
                  std::to_string(r.checked) + " params; ";
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-4 && elapsed < 60.0, detail + fmt(elapsed, 2) + " s"};
}

Outcome permutation_equivariance() {
    Rng rng(303);
    const EncoderConfig c;  // full-size encoder on 87 x 100 maps
    const auto state = init_encoder(c, rng);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Matrix x = Matrix::NullaryExpr(87, 100, [&] { return normal(rng); });
        std::vector<int> perm(87);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix px(87, 100);
        for (int i = 0; i < 87; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        const auto a = encode(state, x);
        const auto b = encode(state, px);
        for (int i = 0; i < 87; ++i)
            worst = std::max(worst, (b.per_roi.row(i) - a.per_roi.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-5, "max entry deviation " + sci(worst) + " over 20 permutations"};
}

Outcome contrastive_oracle() {
    Rng rng(404);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<oracle::Emb> es;
        for (int s = 0; s < 2; ++s)
            for (int v = 0; v < 2; ++v) es.push_back({s, oracle::random_unit(2, rng)});
        std::vector<LabeledEmbedding> batch;
        for (const auto& e : es) {
            ViewEmbedding ve;
            ve.per_roi = Eigen::Map<const Eigen::RowVectorXd>(e.v.data(), 2);
            ve.flat_normalized = ve.per_roi.row(0);
            batch.push_back({"s" + std::to_string(e.subject), ve});
        }
        const double tau = 0.05 + 0.01 * (t % 20);
        worst = std::max(worst, std::abs(discrimination_loss(batch, tau) - oracle::two_view_discrimination(es, tau)));
    }
    return {worst <= 1e-9, "max |library - brute force| " + sci(worst) + " over 100 batches"};
}

Outcome simulation_floor(Study& study, double& elapsed) {
    const auto t0 = Clock::now();
    const auto a = study.aucs(50, 0.01, TaskMode::both);
    elapsed += seconds_since(t0);
    const double m = median(a);
    return {m >= 0.60, "median AUC " + fmt(m) + " " + list(a)};
}

Outcome sample_size_trend(Study& study, double& elapsed) {
    const auto t0 = Clock::now();
    const auto small = study.aucs(50, 0.01, TaskMode::both);
    const auto large = study.aucs(1000, 0.01, TaskMode::both);
    elapsed += seconds_since(t0);
    return {median(large) > median(small),
            "median AUC N=1000 " + fmt(median(large)) + " " + list(large) + " vs N=50 " + fmt(median(small))};
}

Outcome collaboration(Study& study) {
    const double full = median(study.aucs(500, 0.01, TaskMode::both));
    const double recon = median(study.aucs(500, 0.01, TaskMode::recon_only));
    const double disc = median(study.aucs(500, 0.01, TaskMode::disc_only));
    return {full >= recon && full >= disc,
            "median AUC full " + fmt(full) + ", recon_only " + fmt(recon) + ", disc_only " + fmt(disc)};
}

Outcome difficulty(Study& study) {
    bool ok = true;
    std::string detail;
    for (int n : {50, 500}) {
        const double easy = median(study.aucs(n, 0.01, TaskMode::both));
        const double hard = median(study.aucs(n, 100.0, TaskMode::both));
        ok = ok && easy > hard;
        detail += "N=" + std::to_string(n) + ": easy " + fmt(easy) + " vs hard " + fmt(hard) + "; ";
    }
    return {ok, detail};
}

Outcome simulator_fidelity() {
    const auto t0 = Clock::now();
    sim::MomentSpec s;
    s.n_roi = 2;
    s.n_features = 2;
    s.correlation = Matrix::Identity(2, 2);
    s.correlation(0, 1) = s.correlation(1, 0) = 0.5;
    s.skewness = Vector::Zero(4);
    s.kurtosis = Vector::Constant(4, 3.0);
    s.skewness(0) = 1.0;
    s.kurtosis(0) = 5.0;
    s.range_min = Vector::Zero(4);
    s.range_max = Vector::Ones(4);
    sim::SimConfig c;
    c.n_samples = 5000;
    c.apply_separation = false;
    c.separated_rois = {0};
    c.noise_sd = 0.0;
    c.seed = 909;
    const auto report = sim::verify_simulation(sim::generate(s, c), s);
    const double elapsed = seconds_since(t0);
    return {report.passed() && elapsed < 60.0,
            "max errors: skewness " + fmt(report.max_skewness_error, 4) + ", kurtosis " +
                fmt(report.max_kurtosis_error, 4) + ", correlation " + fmt(report.max_correlation_error, 4) + "; " +
                fmt(elapsed, 2) + " s"};
}

std::vector<double> table_numbers(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string cell;
        for (int col = 0; std::getline(row, cell, ','); ++col)
            if (col >= 2) out.push_back(std::stod(cell));
    }
    return out;
}

Outcome reproducibility(const Study& study) {
    const auto dir = std::filesystem::temp_directory_path() / "radssl_acceptance";
    std::filesystem::create_directories(dir);
    std::vector<std::vector<double>> tables;
    for (int run = 0; run < 2; ++run) {
        const auto r = study.run(100, 0.01, TaskMode::both, 42);
        const auto path = dir / ("metrics_" + std::to_string(run) + ".csv");
        write_metrics_table(path, {{"run", r.summary}});
        tables.push_back(table_numbers(path));
    }
    std::filesystem::remove_all(dir);
    if (tables[0].size() != tables[1].size() || tables[0].empty()) return {false, "metric tables differ in shape"};
    double worst = 0.0;
    for (std::size_t i = 0; i < tables[0].size(); ++i) worst = std::max(worst, std::abs(tables[0][i] - tables[1][i]));
    return {worst <= 1e-6, "max table difference " + sci(worst) + " over " +
                               std::to_string(tables[0].size()) + " entries"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::vector<int> only;
    std::string config_path = RADSSL_DESK_CONFIG;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--config", config_path, "Desk-scale run configuration")->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected(only.begin(), only.end());
    auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

    Study study(load_run_config(config_path));
    double study_seconds = 0.0;
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& run) {
        if (!wanted(id)) return;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += o.passed ? 0 : 1;
        std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << " ["
                  << fmt(seconds_since(t0), 1) << " s]" << std::endl;
    };

    report(1, "divergence identities", divergence_suite);
    report(2, "gradient correctness", gradient_checks);
    report(3, "permutation equivariance", permutation_equivariance);
    report(4, "contrastive oracle", contrastive_oracle);
    report(5, "simulation floor", [&] {
        auto o = simulation_floor(study, study_seconds);
        o.passed = o.passed && study_seconds < 900.0;
        return o;
    });
    report(6, "sample-size trend", [&] {
        auto o = sample_size_trend(study, study_seconds);
        o.passed = o.passed && study_seconds < 900.0;
        o.detail += "; N=50 and N=1000 studies took " + fmt(study_seconds, 1) + " s";
        return o;
    });
    report(7, "collaboration benefit", [&] { return collaboration(study); });
    report(8, "difficulty ordering", [&] { return difficulty(study); });
    report(9, "simulator fidelity", simulator_fidelity);
    report(10, "reproducibility", [&] { return reproducibility(study); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
