#include "radssl/pipeline.hpp"

#include "radssl/augmentation.hpp"
#include "radssl/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace radssl {

TaskMode parse_task_mode(std::string_view name) {
    if (name == "both") return TaskMode::both;
    if (name == "recon_only") return TaskMode::recon_only;
    if (name == "disc_only") return TaskMode::disc_only;
    throw TrainingError("unknown task mode '" + std::string(name) + "' (expected both, recon_only or disc_only)");
}

std::string_view to_string(TaskMode mode) {
    switch (mode) {
        case TaskMode::both: return "both";
        case TaskMode::recon_only: return "recon_only";
        case TaskMode::disc_only: return "disc_only";
    }
    return "both";
}

ReconTarget parse_recon_target(std::string_view name) {
    if (name == "full") return ReconTarget::full;
    if (name == "masked_rows") return ReconTarget::masked_rows;
    throw TrainingError("unknown reconstruction target '" + std::string(name) + "' (expected full or masked_rows)");
}

std::string_view to_string(ReconTarget target) { return target == ReconTarget::full ? "full" : "masked_rows"; }

void TrainConfig::validate() const {
    if (epochs < 1 || finetune_epochs < 1) throw TrainingError("train config: epochs must be >= 1");
    if (batch_size < 2) throw TrainingError("train config: batch_size must be >= 2 (the discrimination loss needs 2 subjects)");
    if (!(learning_rate > 0.0)) throw TrainingError("train config: learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw TrainingError("train config: weight_decay must be >= 0");
    if (k_max < 1) throw TrainingError("train config: k_max must be >= 1");
    if (n_views < 1) throw TrainingError("train config: K must be >= 1");
    if (fixed_k && *fixed_k < 1) throw TrainingError("train config: k must be >= 1");
    if (!(label_fraction > 0.0 && label_fraction <= 1.0)) throw TrainingError("train config: label_fraction must lie in (0, 1]");
    if (d_head_hidden < 1) throw TrainingError("train config: d_head_hidden must be >= 1");
    if (threads < 0) throw TrainingError("train config: threads must be >= 0");
    loss_weights.validate();
    if (task_mode != TaskMode::recon_only && n_views < 2)
        throw TrainingError("train config: the discrimination loss needs K >= 2 views per subject");
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32)};
    for (auto s : stream) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

enum Stream : std::uint64_t { kPretrain = 1, kFinetune = 2, kFolds = 3, kInner = 4, kFraction = 5, kFoldJob = 6 };

double effective_lambda(const TrainConfig& config) {
    return config.task_mode == TaskMode::recon_only ? 0.0 : config.loss_weights.lambda;
}

}  // namespace

BatchObjective batch_objective(const EncoderState& encoder, std::span<const SubjectViews> batch,
                               const TrainConfig& config) {
    const auto layout = encoder_layout(encoder.config);
    ad::Tape tape;
    ParameterBinding params(tape, layout, encoder.parameters, true);
    const bool use_recon = config.task_mode != TaskMode::disc_only;
    const double lambda = effective_lambda(config);
    const bool use_disc = config.task_mode == TaskMode::disc_only || lambda > 0.0;

    std::vector<ad::Var> recon_terms;
    std::vector<ad::Var> flats;
    std::vector<int> owner;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto& subject = batch[s];
        std::vector<ad::Var> recons;
        std::vector<std::vector<Eigen::Index>> rows;
        for (const auto& view : subject.views) {
            const auto g = encode_graph(params, encoder.config, tape.constant(view.values));
            flats.push_back(g.flat_normalized);
            owner.push_back(static_cast<int>(s));
            if (use_recon) {
                recons.push_back(reconstruct_graph(params, g.per_roi));
                rows.push_back(view.mask);
            }
        }
        if (use_recon) {
            const auto target = tape.constant(subject.source->values);
            recon_terms.push_back(config.recon_target == ReconTarget::masked_rows
                                      ? recon_loss_graph(target, recons, config.loss_weights.beta, rows)
                                      : recon_loss_graph(target, recons, config.loss_weights.beta));
        }
    }

    BatchObjective out;
    ad::Var total;
    if (use_recon) {
        const auto recon = ad::sum(ad::vcat(recon_terms));
        out.recon = recon.scalar();
        total = recon;
    }
    if (use_disc) {
        const auto disc = discrimination_loss_graph(ad::vcat(flats), owner, config.loss_weights.tau);
        out.disc = disc.scalar();
        if (config.task_mode == TaskMode::disc_only)
            total = disc;
        else
            total = ad::add(total, ad::scale(disc, lambda));
    }
    out.total = total.scalar();
    tape.backward(total);
    out.gradient = params.gradient();
    return out;
}

PretrainResult pretrain(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, {kPretrain, 0}));
    return pretrain_from(dataset, init_encoder(encoder_config, rng), config);
}

PretrainResult pretrain_from(const Dataset& dataset, EncoderState encoder, const TrainConfig& config) {
    config.validate();
    dataset.validate();
    encoder.validate();
    const auto m = dataset.size();
    if (m < 2) throw TrainingError("pretrain: need at least 2 subjects");
    if (dataset.n_features() != encoder.config.d_model)
        throw TrainingError("pretrain: feature count " + std::to_string(dataset.n_features()) +
                            " does not match encoder d_model " + std::to_string(encoder.config.d_model));

    Rng rng(derive_seed(config.seed, {kPretrain, 1}));
    AdamW opt(encoder.parameters.size(), config.learning_rate, config.weight_decay);
    const auto batch_target = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), m);
    const auto steps = (m + static_cast<std::size_t>(config.batch_size) - 1) / static_cast<std::size_t>(config.batch_size);

    PretrainResult result;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            std::vector<std::size_t> chosen;
            while (chosen.size() < batch_target) {
                const auto [a, b] = sample_pair_indices(m, rng);
                for (auto i : {a, b})
                    if (chosen.size() < batch_target && std::find(chosen.begin(), chosen.end(), i) == chosen.end())
                        chosen.push_back(i);
            }
            const int k = config.fixed_k ? *config.fixed_k : draw_mask_count(config.k_max, dataset.n_roi(), rng);
            std::vector<SubjectViews> batch;
            batch.reserve(chosen.size());
            for (auto i : chosen)
                batch.push_back({&dataset.maps[i], make_views(dataset.maps[i], k, config.n_views, rng)});

            const auto obj = batch_objective(encoder, batch, config);
            if (!std::isfinite(obj.total) || !obj.gradient.allFinite())
                throw TrainingError("pretrain: divergent loss at epoch " + std::to_string(epoch));
            opt.step(encoder.parameters, obj.gradient);
            epoch_loss += obj.total;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(steps));
    }
    result.encoder = std::move(encoder);
    return result;
}

std::array<double, 2> class_weights(std::span<const double> labels) {
    std::array<double, 2> counts{0.0, 0.0};
    for (double y : labels) counts[y > 0.5 ? 1 : 0] += 1.0;
    if (counts[0] == 0.0 || counts[1] == 0.0) throw TrainingError("class weights: both classes must be present");
    const double n = counts[0] + counts[1];
    return {n / (2.0 * counts[0]), n / (2.0 * counts[1])};
}

Task infer_task(const Dataset& dataset) {
    if (!dataset.labels) throw TrainingError("dataset has no labels");
    for (double y : *dataset.labels)
        if (y != 0.0 && y != 1.0) return Task::regression;
    return Task::classification;
}

std::vector<double> predict(const ModelState& model, const Dataset& dataset) {
    const auto enc_layout = encoder_layout(model.encoder.config);
    const auto head_layout = model.head_layout();
    std::vector<double> out;
    out.reserve(dataset.size());
    for (const auto& map : dataset.maps) {
        ad::Tape tape;
        ParameterBinding enc(tape, enc_layout, model.encoder.parameters, false);
        ParameterBinding head(tape, head_layout, model.head_parameters, false);
        const auto g = encode_graph(enc, model.encoder.config, tape.constant(map.values));
        const Matrix o = head_graph(head, model.task, g.per_roi).value();
        if (model.task == Task::classification) {
            const double mx = o.maxCoeff();
            const double e0 = std::exp(o(0, 0) - mx);
            const double e1 = std::exp(o(0, 1) - mx);
            out.push_back(e1 / (e0 + e1));
        } else {
            out.push_back(model.target_mean + model.target_scale * o(0, 0));
        }
    }
    return out;
}

namespace {

// Higher is better.
double validation_score(const ModelState& model, const Dataset& validation) {
    const auto preds = predict(model, validation);
    const auto& labels = *validation.labels;
    if (model.task == Task::regression) {
        double mae = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) mae += std::abs(preds[i] - labels[i]);
        return -mae / static_cast<double>(preds.size());
    }
    std::array<double, 2> hit{0, 0};
    std::array<double, 2> count{0, 0};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int y = labels[i] > 0.5 ? 1 : 0;
        count[y] += 1;
        if ((preds[i] >= 0.5) == (y == 1)) hit[y] += 1;
    }
    double score = 0.0;
    int classes = 0;
    for (int c = 0; c < 2; ++c) {
        if (count[c] > 0) {
            score += hit[c] / count[c];
            ++classes;
        }
    }
    return score / classes;
}

void check_labels(const Dataset& d, Task task, const char* what) {
    if (!d.labels) throw TrainingError(std::string(what) + ": dataset has no labels");
    if (task == Task::classification)
        for (double y : *d.labels)
            if (y != 0.0 && y != 1.0)
                throw TrainingError(std::string(what) + ": classification needs labels in {0, 1}, got " + std::to_string(y));
}

}  // namespace

FinetuneResult finetune(const EncoderState& encoder, const Dataset& train, Task task, const TrainConfig& config,
                        const Dataset* validation) {
    config.validate();
    train.validate();
    check_labels(train, task, "finetune");
    if (validation) check_labels(*validation, task, "finetune validation");
    const auto& labels = *train.labels;

    Rng rng(derive_seed(config.seed, {kFinetune, 0}));
    FinetuneResult result;
    result.model = attach_downstream_head(encoder, task, rng, config.d_head_hidden);
    auto& model = result.model;

    std::array<double, 2> weights{1.0, 1.0};
    if (task == Task::classification) {
        weights = class_weights(labels);
    } else {
        double mean = 0.0;
        for (double y : labels) mean += y;
        mean /= static_cast<double>(labels.size());
        double var = 0.0;
        for (double y : labels) var += (y - mean) * (y - mean);
        var /= static_cast<double>(labels.size());
        model.target_mean = mean;
        model.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    const auto enc_layout = encoder_layout(model.encoder.config);
    const auto head_layout = model.head_layout();
    const auto n_enc = model.encoder.parameters.size();
    const auto n_head = model.head_parameters.size();
    Vector params(n_enc + n_head);
    params << model.encoder.parameters, model.head_parameters;
    AdamW opt(params.size(), config.learning_rate, config.weight_decay);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto bs = static_cast<std::size_t>(config.batch_size);
    double best_score = -std::numeric_limits<double>::infinity();
    ModelState best = model;

    for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const auto end = std::min(order.size(), start + bs);
            ad::Tape tape;
            ParameterBinding enc(tape, enc_layout, model.encoder.parameters, true);
            ParameterBinding head(tape, head_layout, model.head_parameters, true);
            std::vector<ad::Var> terms;
            double weight_sum = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto idx = order[i];
                const auto g = encode_graph(enc, model.encoder.config, tape.constant(train.maps[idx].values));
                const auto out = head_graph(head, task, g.per_roi);
                if (task == Task::classification) {
                    const int y = labels[idx] > 0.5 ? 1 : 0;
                    const double w = weights[static_cast<std::size_t>(y)];
                    terms.push_back(ad::scale(ad::slice_cols(ad::log_softmax_all(out), y, 1), -w));
                    weight_sum += w;
                } else {
                    const double target = (labels[idx] - model.target_mean) / model.target_scale;
                    terms.push_back(ad::sum_squares(ad::add_scalar(out, -target)));
                    weight_sum += 1.0;
                }
            }
            const auto loss = ad::scale(ad::sum(ad::vcat(terms)), 1.0 / weight_sum);
            tape.backward(loss);
            if (!std::isfinite(loss.scalar())) throw TrainingError("finetune: divergent loss at epoch " + std::to_string(epoch));
            Vector grad(params.size());
            grad << enc.gradient(), head.gradient();
            opt.step(params, grad);
            model.encoder.parameters = params.head(n_enc);
            model.head_parameters = params.tail(n_head);
            epoch_loss += loss.scalar();
            ++batches;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(batches));
        if (validation) {
            const double score = validation_score(model, *validation);
            if (score >= best_score) {
                best_score = score;
                best = model;
                result.best_epoch = epoch;
            }
        }
    }
    if (validation)
        model = std::move(best);
    else
        result.best_epoch = config.finetune_epochs;
    return result;
}

std::vector<int> assign_folds(std::span<const double> labels, int folds, Task task, std::uint64_t seed) {
    if (folds < 2) throw TrainingError("cross-validation needs at least 2 folds");
    if (static_cast<std::size_t>(folds) > labels.size())
        throw TrainingError("cross-validation: " + std::to_string(folds) + " folds exceed " + std::to_string(labels.size()) +
                            " subjects");
    Rng rng(seed);
    std::vector<int> fold(labels.size(), 0);
    std::vector<std::vector<std::size_t>> strata(task == Task::classification ? 2 : 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        strata[task == Task::classification && labels[i] > 0.5 ? 1 : 0].push_back(i);
    int next = 0;
    for (auto& s : strata) {
        std::shuffle(s.begin(), s.end(), rng);
        for (auto i : s) {
            fold[i] = next;
            next = (next + 1) % folds;
        }
    }
    return fold;
}

namespace {

std::vector<std::string> ids_of(const Dataset& d, std::span<const std::size_t> idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(d.maps[i].subject_id);
    return out;
}

std::vector<double> labels_of(const Dataset& d, std::span<const std::size_t> idx) {
    std::vector<double> out;
    for (auto i : idx) out.push_back((*d.labels)[i]);
    return out;
}

// Stratified subsample keeping ceil(fraction * n_c) per class.
std::vector<std::size_t> subsample(const Dataset& d, std::span<const std::size_t> idx, double fraction, Task task,
                                   std::uint64_t seed) {
    if (fraction >= 1.0) return {idx.begin(), idx.end()};
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> strata(2);
    for (auto i : idx) strata[task == Task::classification && (*d.labels)[i] > 0.5 ? 1 : 0].push_back(i);
    std::vector<std::size_t> out;
    for (auto& s : strata) {
        if (s.empty()) continue;
        std::shuffle(s.begin(), s.end(), rng);
        const auto keep = std::max<std::size_t>(task == Task::classification ? 1 : 2,
                                                static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(s.size()))));
        out.insert(out.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(std::min(keep, s.size())));
    }
    std::sort(out.begin(), out.end());
    return out;
}

template <typename Job>
void run_parallel(std::size_t count, int threads, Job&& job) {
    const auto hw = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = std::min<std::size_t>(count, threads > 0 ? static_cast<std::size_t>(threads) : hw);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

CvResult nested_cv(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config,
                   const CvOptions& options) {
    config.validate();
    dataset.validate();
    check_labels(dataset, options.task, "nested_cv");
    if (options.repetitions < 1) throw TrainingError("nested_cv: repetitions must be >= 1");
    if (options.folds < 3) throw TrainingError("nested_cv: need at least 3 folds (train, validation and test)");
    const auto& labels = *dataset.labels;
    if (options.task == Task::classification) {
        const auto ones = static_cast<int>(std::count(labels.begin(), labels.end(), 1.0));
        const auto zeros = static_cast<int>(labels.size()) - ones;
        if (std::min(ones, zeros) < options.folds)
            throw TrainingError("nested_cv: each class needs at least " + std::to_string(options.folds) + " subjects");
    }

    struct Job {
        int rep;
        int fold;
        std::vector<std::size_t> train, validation, test;
    };
    std::vector<Job> jobs;
    for (int rep = 0; rep < options.repetitions; ++rep) {
        const auto outer = assign_folds(labels, options.folds, options.task, derive_seed(config.seed, {kFolds, std::uint64_t(rep)}));
        for (int f = 0; f < options.folds; ++f) {
            Job job{rep, f, {}, {}, {}};
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < labels.size(); ++i) (outer[i] == f ? job.test : rest).push_back(i);
            const auto rest_labels = labels_of(dataset, rest);
            const auto inner = assign_folds(rest_labels, options.folds - 1, options.task,
                                            derive_seed(config.seed, {kInner, std::uint64_t(rep), std::uint64_t(f)}));
            for (std::size_t j = 0; j < rest.size(); ++j) (inner[j] == 0 ? job.validation : job.train).push_back(rest[j]);
            jobs.push_back(std::move(job));
        }
    }

    CvResult result;
    result.folds.resize(jobs.size());
    run_parallel(jobs.size(), config.threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        TrainConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, {kFoldJob, std::uint64_t(job.rep), std::uint64_t(job.fold)});

        Dataset tagged = dataset;
        tagged.split_tags = std::vector<SplitTag>(dataset.size(), SplitTag::test);
        for (auto i : job.train) (*tagged.split_tags)[i] = SplitTag::train;
        for (auto i : job.validation) (*tagged.split_tags)[i] = SplitTag::validation;
        const auto [normalized, stats] = zscore_normalize(tagged);

        std::vector<std::size_t> pre_idx = job.train;
        pre_idx.insert(pre_idx.end(), job.validation.begin(), job.validation.end());
        std::sort(pre_idx.begin(), pre_idx.end());
        const auto ft_idx = subsample(dataset, job.train, config.label_fraction, options.task,
                                      derive_seed(fold_config.seed, {kFraction}));

        FoldRecord rec;
        rec.repetition = job.rep;
        rec.fold = job.fold;
        rec.test_ids = ids_of(dataset, job.test);
        rec.validation_ids = ids_of(dataset, job.validation);
        rec.finetune_ids = ids_of(dataset, ft_idx);
        rec.normalization_ids = stats.fitted_on;

        EncoderState encoder;
        if (options.supervised_only) {
            Rng rng(derive_seed(fold_config.seed, {kPretrain, 0}));
            encoder = init_encoder(encoder_config, rng);
        } else {
            rec.pretrain_ids = ids_of(dataset, pre_idx);
            encoder = pretrain(normalized.subset(pre_idx), encoder_config, fold_config).encoder;
        }
        const auto validation = normalized.subset(job.validation);
        const auto ft = finetune(encoder, normalized.subset(ft_idx), options.task, fold_config, &validation);
        rec.best_epoch = ft.best_epoch;
        const auto preds = predict(ft.model, normalized.subset(job.test));
        rec.metrics = evaluate(preds, labels_of(dataset, job.test), options.task);
        result.folds[j] = std::move(rec);
    });

    std::vector<MetricsReport> per_fold;
    per_fold.reserve(result.folds.size());
    for (const auto& f : result.folds) per_fold.push_back(f.metrics);
    result.summary = aggregate(per_fold);
    return result;
}

void check_no_leakage(const CvResult& result, const Dataset& dataset) {
    std::map<int, std::multiset<std::string>> tested;
    for (const auto& f : result.folds) {
        const std::set<std::string> test(f.test_ids.begin(), f.test_ids.end());
        const auto where = "repetition " + std::to_string(f.repetition) + ", fold " + std::to_string(f.fold);
        for (const auto* used : {&f.pretrain_ids, &f.finetune_ids, &f.normalization_ids, &f.validation_ids})
            for (const auto& id : *used)
                if (test.count(id)) throw TrainingError("leakage: test subject '" + id + "' used in training at " + where);
        tested[f.repetition].insert(f.test_ids.begin(), f.test_ids.end());
    }
    for (const auto& [rep, ids] : tested) {
        if (ids.size() != dataset.size())
            throw TrainingError("repetition " + std::to_string(rep) + ": test folds do not cover every subject exactly once");
        for (const auto& m : dataset.maps)
            if (ids.count(m.subject_id) != 1)
                throw TrainingError("repetition " + std::to_string(rep) + ": subject '" + m.subject_id +
                                    "' is not tested exactly once");
    }
}

SweepKind parse_sweep_kind(std::string_view name) {
    if (name == "beta") return SweepKind::beta;
    if (name == "lambda") return SweepKind::lambda;
    if (name == "k") return SweepKind::k;
    if (name == "label_fraction") return SweepKind::label_fraction;
    if (name == "task_mode") return SweepKind::task_mode;
    throw TrainingError("unknown sweep '" + std::string(name) + "'");
}

std::string_view to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::beta: return "beta";
        case SweepKind::lambda: return "lambda";
        case SweepKind::k: return "k";
        case SweepKind::label_fraction: return "label_fraction";
        case SweepKind::task_mode: return "task_mode";
    }
    return "beta";
}

std::vector<AblationRow> ablate(const Dataset& dataset, const EncoderConfig& encoder_config, const TrainConfig& config,
                                const Sweep& sweep, const CvOptions& options) {
    const bool modes = sweep.kind == SweepKind::task_mode;
    if ((modes && sweep.modes.empty()) || (!modes && sweep.values.empty())) throw TrainingError("ablate: empty grid");
    std::vector<AblationRow> rows;
    const auto n = modes ? sweep.modes.size() : sweep.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        TrainConfig c = config;
        std::ostringstream value;
        if (modes) {
            c.task_mode = sweep.modes[i];
            value << to_string(c.task_mode);
        } else {
            const double v = sweep.values[i];
            value << v;
            switch (sweep.kind) {
                case SweepKind::beta: c.loss_weights.beta = v; break;
                case SweepKind::lambda: c.loss_weights.lambda = v; break;
                case SweepKind::k: c.fixed_k = static_cast<int>(std::lround(v)); break;
                case SweepKind::label_fraction: c.label_fraction = v; break;
                case SweepKind::task_mode: break;
            }
        }
        rows.push_back({std::string(to_string(sweep.kind)), value.str(), nested_cv(dataset, encoder_config, c, options).summary});
    }
    return rows;
}

}  // namespace radssl
