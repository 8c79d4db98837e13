#include "oracles.hpp"

#include "radssl/pipeline.hpp"
#include "radssl/simulator.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace radssl;

namespace {

EncoderConfig tiny_encoder() {
    EncoderConfig c;
    c.n_blocks = 1;
    c.n_heads = 2;
    c.d_model = 4;
    c.d_embed = 2;
    c.d_ff = 8;
    c.d_recon_hidden = 8;
    return c;
}

TrainConfig tiny_train() {
    TrainConfig t;
    t.epochs = 3;
    t.finetune_epochs = 20;
    t.batch_size = 4;
    t.k_max = 2;
    t.n_views = 3;
    t.learning_rate = 1e-2;
    t.d_head_hidden = 8;
    t.seed = 7;
    t.threads = 1;
    return t;
}

// Subjects with 5 ROIs x 4 features; class 1 is shifted by `shift` on every entry.
Dataset toy_dataset(int n, double shift, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    Dataset d;
    d.labels = std::vector<double>{};
    for (int i = 0; i < n; ++i) {
        FeatureMap m;
        m.subject_id = "sub" + std::to_string(i);
        const double y = i % 2;
        m.values = Matrix::NullaryExpr(5, 4, [&] { return normal(rng) + shift * y; });
        for (int r = 0; r < 5; ++r) m.roi_ids.push_back("r" + std::to_string(r));
        for (int f = 0; f < 4; ++f) m.feature_names.push_back("f" + std::to_string(f));
        d.maps.push_back(std::move(m));
        d.labels->push_back(y);
    }
    return d;
}

}  // namespace

TEST_CASE("mode and target names round-trip") {
    for (auto m : {TaskMode::both, TaskMode::recon_only, TaskMode::disc_only}) CHECK(parse_task_mode(to_string(m)) == m);
    for (auto t : {ReconTarget::full, ReconTarget::masked_rows}) CHECK(parse_recon_target(to_string(t)) == t);
    for (auto k : {SweepKind::beta, SweepKind::lambda, SweepKind::k, SweepKind::label_fraction, SweepKind::task_mode})
        CHECK(parse_sweep_kind(to_string(k)) == k);
    CHECK_THROWS(parse_task_mode("joint"));
    CHECK_THROWS(parse_sweep_kind("gamma"));
}

TEST_CASE("training configuration validation") {
    auto t = tiny_train();
    CHECK_NOTHROW(t.validate());
    t.batch_size = 1;
    CHECK_THROWS_AS(t.validate(), TrainingError);
    t = tiny_train();
    t.n_views = 1;
    CHECK_THROWS_AS(t.validate(), TrainingError);
    t.task_mode = TaskMode::recon_only;
    CHECK_NOTHROW(t.validate());
    t = tiny_train();
    t.label_fraction = 0.0;
    CHECK_THROWS_AS(t.validate(), TrainingError);
}

TEST_CASE("class weights are inverse frequency") {
    std::vector<double> labels(100, 0.0);
    std::fill(labels.begin(), labels.begin() + 10, 1.0);
    const auto w = class_weights(labels);
    CHECK(w[0] == doctest::Approx(100.0 / 180.0));
    CHECK(w[1] == doctest::Approx(5.0));
    // Weighted class totals balance.
    CHECK(w[0] * 90 == doctest::Approx(w[1] * 10));
}

TEST_CASE("derive_seed separates streams deterministically") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("pretraining lowers the loss and is reproducible") {
    const auto d = toy_dataset(16, 0.0, 1);
    auto t = tiny_train();
    t.epochs = 15;
    const auto a = pretrain(d, tiny_encoder(), t);
    REQUIRE(a.loss_history.size() == 15);
    const double first = (a.loss_history[0] + a.loss_history[1]) / 2;
    const double last = (a.loss_history[13] + a.loss_history[14]) / 2;
    CHECK(last < first);
    const auto b = pretrain(d, tiny_encoder(), t);
    CHECK(a.encoder.parameters == b.encoder.parameters);
    CHECK(a.loss_history == b.loss_history);

    t.seed = 8;
    CHECK(pretrain(d, tiny_encoder(), t).encoder.parameters != a.encoder.parameters);
}

TEST_CASE("lambda = 0 matches reconstruction-only training and differs from the joint objective") {
    const auto d = toy_dataset(8, 0.0, 2);
    auto t = tiny_train();
    t.loss_weights.lambda = 0.0;
    const auto zero = pretrain(d, tiny_encoder(), t);
    t.loss_weights.lambda = 1.0;
    t.task_mode = TaskMode::recon_only;
    const auto recon = pretrain(d, tiny_encoder(), t);
    CHECK((zero.encoder.parameters - recon.encoder.parameters).cwiseAbs().maxCoeff() <= 1e-12);
    t.task_mode = TaskMode::both;
    const auto joint = pretrain(d, tiny_encoder(), t);
    CHECK((joint.encoder.parameters - zero.encoder.parameters).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("batch objective reports its parts") {
    const auto toy = oracle::make_toy_batch(3);
    TrainConfig t;
    t.loss_weights.lambda = 0.25;
    const auto o = batch_objective(toy.encoder, toy.batch, t);
    CHECK(o.total == doctest::Approx(o.recon + 0.25 * o.disc).epsilon(1e-12));
    t.task_mode = TaskMode::disc_only;
    const auto d = batch_objective(toy.encoder, toy.batch, t);
    CHECK(d.total == doctest::Approx(d.disc).epsilon(1e-12));
}

TEST_CASE("fine-tuning separates a separable toy problem") {
    const auto train = toy_dataset(40, 4.0, 3);
    const auto test = toy_dataset(20, 4.0, 4);
    Rng rng(1);
    const auto enc = init_encoder(tiny_encoder(), rng);
    auto t = tiny_train();
    t.finetune_epochs = 40;
    const auto r = finetune(enc, train, Task::classification, t);
    CHECK(r.best_epoch == 40);
    CHECK(r.model.encoder.parameters != enc.parameters);
    const auto p = predict(r.model, test);
    const auto m = evaluate(p, *test.labels, Task::classification);
    CHECK(m.ba.mean == doctest::Approx(1.0));
    CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("fine-tuning a constant regression target") {
    auto train = toy_dataset(20, 0.0, 5);
    for (auto& y : *train.labels) y = 3.5;
    Rng rng(2);
    const auto enc = init_encoder(tiny_encoder(), rng);
    auto mae_after = [&](int epochs) {
        auto t = tiny_train();
        t.finetune_epochs = epochs;
        const auto r = finetune(enc, train, Task::regression, t);
        return evaluate(predict(r.model, train), *train.labels, Task::regression).mae.mean;
    };
    const double early = mae_after(2);
    const double late = mae_after(60);
    CHECK(late < early);
    CHECK(late <= 1e-3);
}

TEST_CASE("validation-based epoch selection") {
    const auto train = toy_dataset(20, 3.0, 6);
    const auto val = toy_dataset(10, 3.0, 7);
    Rng rng(3);
    const auto enc = init_encoder(tiny_encoder(), rng);
    const auto r = finetune(enc, train, Task::classification, tiny_train(), &val);
    CHECK(r.best_epoch >= 1);
    CHECK(r.best_epoch <= 20);
    CHECK(r.loss_history.size() == 20);
}

TEST_CASE("label checks") {
    auto d = toy_dataset(10, 0.0, 8);
    CHECK(infer_task(d) == Task::classification);
    (*d.labels)[0] = 0.5;
    CHECK(infer_task(d) == Task::regression);
    Rng rng(4);
    const auto enc = init_encoder(tiny_encoder(), rng);
    CHECK_THROWS(finetune(enc, d, Task::classification, tiny_train()));
    d.labels.reset();
    CHECK_THROWS(finetune(enc, d, Task::regression, tiny_train()));
}

TEST_CASE("fold assignment is stratified and balanced") {
    std::vector<double> labels(30, 0.0);
    std::fill(labels.begin(), labels.begin() + 10, 1.0);
    const auto f = assign_folds(labels, 5, Task::classification, 9);
    REQUIRE(f.size() == 30);
    for (int k = 0; k < 5; ++k) {
        int pos = 0, all = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[i] == k) {
                ++all;
                pos += labels[i] == 1.0;
            }
        CHECK(all == 6);
        CHECK(pos == 2);
    }
    CHECK(f == assign_folds(labels, 5, Task::classification, 9));
    CHECK_THROWS(assign_folds(labels, 31, Task::classification, 9));
    CHECK_THROWS(assign_folds(labels, 1, Task::classification, 9));
}

TEST_CASE("nested cross-validation keeps test subjects out of training") {
    const auto d = toy_dataset(20, 2.0, 10);
    auto t = tiny_train();
    t.finetune_epochs = 5;
    t.threads = 2;
    CvOptions o;
    o.folds = 4;
    o.repetitions = 2;
    const auto r = nested_cv(d, tiny_encoder(), t, o);
    REQUIRE(r.folds.size() == 8);
    CHECK_NOTHROW(check_no_leakage(r, d));
    CHECK(r.summary.runs == 8);

    for (int rep = 0; rep < 2; ++rep) {
        std::multiset<std::string> seen;
        for (const auto& f : r.folds)
            if (f.repetition == rep) seen.insert(f.test_ids.begin(), f.test_ids.end());
        CHECK(seen.size() == 20);
        CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == 20);
    }
    for (const auto& f : r.folds) {
        std::set<std::string> norm(f.normalization_ids.begin(), f.normalization_ids.end());
        for (const auto& v : f.validation_ids) CHECK(norm.count(v) == 0);
        CHECK(f.pretrain_ids.size() == 20 - f.test_ids.size());
    }

    auto leaky = r;
    leaky.folds[0].finetune_ids.push_back(leaky.folds[0].test_ids.front());
    CHECK_THROWS_AS(check_no_leakage(leaky, d), TrainingError);

    // Thread count does not change results.
    t.threads = 1;
    const auto serial = nested_cv(d, tiny_encoder(), t, o);
    for (std::size_t i = 0; i < r.folds.size(); ++i)
        CHECK(serial.folds[i].metrics.auc.mean == r.folds[i].metrics.auc.mean);

    o.folds = 30;
    CHECK_THROWS(nested_cv(d, tiny_encoder(), t, o));
}

TEST_CASE("label fraction shrinks the fine-tuning set") {
    const auto d = toy_dataset(20, 2.0, 11);
    auto t = tiny_train();
    t.epochs = 1;
    t.finetune_epochs = 2;
    t.label_fraction = 0.5;
    CvOptions o;
    o.folds = 4;
    o.repetitions = 1;
    const auto r = nested_cv(d, tiny_encoder(), t, o);
    for (const auto& f : r.folds) {
        const auto available = 20 - f.test_ids.size() - f.validation_ids.size();
        CHECK(f.finetune_ids.size() < available);
        CHECK(f.finetune_ids.size() >= 2);
    }
}

TEST_CASE("ablation runs one cycle per grid point") {
    const auto d = toy_dataset(12, 2.0, 12);
    auto t = tiny_train();
    t.epochs = 1;
    t.finetune_epochs = 2;
    CvOptions o;
    o.folds = 3;
    o.repetitions = 1;
    Sweep s;
    s.kind = SweepKind::beta;
    s.values = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto rows = ablate(d, tiny_encoder(), t, s, o);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].parameter == "beta");
    for (const auto& r : rows) CHECK(r.metrics.runs == 3);

    Sweep modes;
    modes.kind = SweepKind::task_mode;
    modes.modes = {TaskMode::recon_only, TaskMode::disc_only};
    const auto mrows = ablate(d, tiny_encoder(), t, modes, o);
    REQUIRE(mrows.size() == 2);
    CHECK(mrows[1].value == "disc_only");

    s.values.clear();
    CHECK_THROWS(ablate(d, tiny_encoder(), t, s, o));
}
