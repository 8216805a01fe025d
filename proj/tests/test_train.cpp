#include <cmath>
#include <numeric>

#include "cornyield/csv.hpp"
#include "cornyield/log.hpp"
#include "cornyield/train.hpp"
#include "support.hpp"

using namespace cornyield;
using namespace cornyield::train;
using cornyield::testing::random_sample;

namespace {

std::vector<const Sample*> pointers(const std::vector<Sample>& v) {
    std::vector<const Sample*> out;
    for (const auto& s : v) out.push_back(&s);
    return out;
}

lstm::LstmModel small_model(std::uint64_t seed, std::size_t f = 3, std::vector<std::size_t> hidden = {4}) {
    auto m = lstm::init_params(lstm::Layout{f, std::move(hidden)}, seed);
    m.norm.target_mean = 150;
    m.norm.target_std = 20;
    return m;
}

double max_abs(const lstm::Params& p) {
    double out = 0;
    lstm::for_each_block(p, [&](const std::string&, std::span<const double> v) {
        for (double x : v) out = std::max(out, std::abs(x));
    });
    return out;
}

std::vector<double> flat(const lstm::Params& p) {
    std::vector<double> out;
    lstm::for_each_block(p, [&](const std::string&, std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); });
    return out;
}

// Daily GDD-like increments whose running total drives a linear target.
std::vector<Sample> cum_gdd_dataset(std::size_t n, std::size_t t_len, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.key = "c" + std::to_string(i);
        s.members = {s.key};
        s.year = 2000;
        s.features = Matrix(1, t_len);
        const double warmth = rng.uniform(5.0, 20.0);
        double cum = 0;
        for (std::size_t t = 0; t < t_len; ++t) {
            cum += std::max(0.0, warmth + rng.normal(0.0, 3.0));
            s.features(0, t) = cum;
        }
        s.target_adjusted = 100.0 + 0.05 * cum;
        out.push_back(std::move(s));
    }
    return out;
}

double variance(const std::vector<Sample>& v) {
    double mean = 0;
    for (const auto& s : v) mean += s.target_adjusted;
    mean /= static_cast<double>(v.size());
    double acc = 0;
    for (const auto& s : v) acc += (s.target_adjusted - mean) * (s.target_adjusted - mean);
    return acc / static_cast<double>(v.size());
}

Split tiny_split(std::uint64_t seed, std::size_t n = 40, std::size_t t = 12) {
    Rng rng(seed);
    std::vector<Sample> all;
    for (std::size_t i = 0; i < n; ++i) {
        auto s = random_sample(rng, 2, t, "c" + std::to_string(i));
        s.target_adjusted = 150 + 10 * s.features(0, t - 1) - 5 * s.features(1, 0);
        all.push_back(std::move(s));
    }
    return split_validation(std::move(all), 0.25, seed);
}

}  // namespace

TEST(Mse, Examples) {
    const std::vector<double> y{1, 2, 3, 4};
    EXPECT_EQ(mse(y, y), 0.0);
    EXPECT_EQ(mse(std::vector<double>{2, 3, 4, 5}, y), 1.0);
    const double mean = 2.5;
    EXPECT_DOUBLE_EQ(mse(std::vector<double>(4, mean), y), 1.25);  // population variance
    EXPECT_ERROR_KIND(mse(y, std::vector<double>{1}), ErrorKind::Shape);
    EXPECT_ERROR_KIND(mse(std::vector<double>{}, std::vector<double>{}), ErrorKind::Shape);
}

TEST(Bptt, ZeroLossGivesZeroGradient) {
    Rng rng(1);
    const auto model = small_model(1);
    std::vector<Sample> batch{random_sample(rng, 3, 6), random_sample(rng, 3, 6)};
    for (auto& s : batch) s.target_adjusted = lstm::forward(s.features, model);
    const auto r = bptt(pointers(batch), model);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(max_abs(r.gradient), 0.0);
}

TEST(Bptt, DuplicatedBatchKeepsMeanGradient) {
    Rng rng(2);
    const auto model = small_model(2, 3, {4, 3});
    std::vector<Sample> batch{random_sample(rng, 3, 8), random_sample(rng, 3, 8), random_sample(rng, 3, 8)};
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const auto a = flat(bptt(pointers(batch), model).gradient);
    const auto b = flat(bptt(pointers(doubled), model).gradient);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(a[i])));
}

TEST(Bptt, MatchesFiniteDifferencesOnDefaultLayout) {
    const auto report = grad_check(GradCheckConfig{}, 0);
    EXPECT_TRUE(report.passed) << report.max_relative_error << " in " << report.worst_block;
    EXPECT_LT(report.max_relative_error, 1e-5);
    EXPECT_EQ(report.parameters, 4u * 4 * 3 + 4 * 4 * 4 + 16 + 4 + 1);
}

TEST(GradCheck, TenSeedsBothDepthsWithDropout) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GradCheckConfig cfg;
        cfg.hidden_sizes = seed % 2 == 0 ? std::vector<std::size_t>{4} : std::vector<std::size_t>{4, 4};
        cfg.dropout_rate = seed % 3 == 0 ? 0.3 : 0.0;
        const auto r = grad_check(cfg, seed);
        EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.max_relative_error << " in " << r.worst_block;
    }
}

TEST(GradCheck, CorruptedRecurrentGradientIsCaught) {
    const auto r = grad_check(GradCheckConfig{}, 0, [](lstm::Params& g) { g.layers[0].W(3, 2) += 1e-2; });
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.worst_block, "layer0.W");
    EXPECT_EQ(r.worst_index, 3u * 4 + 2);
}

TEST(GradCheck, LargerEpsilonStillAccurate) {
    GradCheckConfig cfg;
    cfg.epsilon = 1e-3;
    cfg.tolerance = 1e-3;
    const auto coarse = grad_check(cfg, 0);
    EXPECT_TRUE(coarse.passed) << coarse.max_relative_error;
    EXPECT_LT(coarse.max_relative_error, 1e-3);
}

TEST(GradCheck, ParameterBudget) {
    GradCheckConfig cfg;
    cfg.hidden_sizes = {40};
    EXPECT_ERROR_KIND(grad_check(cfg, 0), ErrorKind::Config);
}

TEST(Sgd, ScalarArithmeticAndNoOps) {
    auto model = small_model(3);
    auto grad = model.params.zeros_like();
    model.params.head_b = 1.0;
    grad.head_b = 0.5;
    sgd_step(model, grad, 0.1);
    EXPECT_DOUBLE_EQ(model.params.head_b, 0.95);

    const auto before = model;
    sgd_step(model, model.params.zeros_like(), 0.1);
    EXPECT_EQ(model, before);
    sgd_step(model, grad, 0.0);
    EXPECT_EQ(model, before);
    EXPECT_ERROR_KIND(sgd_step(model, grad, NAN), ErrorKind::Config);
}

TEST(Sgd, ClipsToGlobalNorm) {
    auto model = small_model(4);
    auto grad = model.params.zeros_like();
    grad.head_b = 30.0;
    grad.head_w[0] = 40.0;
    const double start_b = model.params.head_b, start_w = model.params.head_w[0];
    EXPECT_DOUBLE_EQ(global_norm(grad), 50.0);
    EXPECT_DOUBLE_EQ(sgd_step(model, grad, 1.0, 5.0), 50.0);
    EXPECT_NEAR(model.params.head_b, start_b - 3.0, 1e-12);
    EXPECT_NEAR(model.params.head_w[0], start_w - 4.0, 1e-12);
}

TEST(Sgd, SmallStepDecreasesBatchLoss) {
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        auto model = small_model(10 + rep, 3, {5});
        std::vector<Sample> batch;
        for (int i = 0; i < 4; ++i) batch.push_back(random_sample(rng, 3, 10));
        const auto r = bptt(pointers(batch), model);
        ASSERT_GT(global_norm(r.gradient), 0.0);
        sgd_step(model, r.gradient, 1e-6, 1e9);
        EXPECT_LT(bptt(pointers(batch), model).loss, r.loss);
    }
}

TEST(Split, ValidationHoldsOnlyOriginals) {
    Rng rng(6);
    std::vector<Sample> all;
    for (int i = 0; i < 50; ++i) all.push_back(random_sample(rng, 1, 3, "c" + std::to_string(i)));
    for (int i = 0; i < 30; ++i) {
        auto s = random_sample(rng, 1, 3, "c" + std::to_string(i) + "+x");
        s.members = {"c" + std::to_string(i), "x"};
        all.push_back(s);
    }
    const auto split = split_validation(all, 0.1, 7);
    EXPECT_EQ(split.validation.size(), 5u);
    EXPECT_EQ(split.train.size(), 75u);
    for (const auto& s : split.validation) EXPECT_FALSE(s.is_combination());
    const auto again = split_validation(all, 0.1, 7);
    EXPECT_EQ(again.validation, split.validation);
    EXPECT_NE(split_validation(all, 0.1, 8).validation, split.validation);
}

TEST(NormStats, MatchesDirectComputation) {
    Rng rng(7);
    std::vector<Sample> v;
    for (int i = 0; i < 5; ++i) v.push_back(random_sample(rng, 2, 4));
    for (auto& s : v) s.features(1, 0) = s.features(1, 1) = s.features(1, 2) = s.features(1, 3) = 3.0;
    const auto n = compute_norm_stats(v);
    double sum = 0, sq = 0;
    for (const auto& s : v)
        for (double x : s.features.row(0)) sum += x, sq += x * x;
    const double mean = sum / 20;
    EXPECT_NEAR(n.feature_mean[0], mean, 1e-12);
    EXPECT_NEAR(n.feature_std[0], std::sqrt(sq / 20 - mean * mean), 1e-9);
    EXPECT_EQ(n.feature_mean[1], 3.0);
    EXPECT_EQ(n.feature_std[1], 1.0);  // constant feature
    EXPECT_GT(n.target_std, 0.0);
}

TEST(TrainModel, DeterministicPerSeed) {
    Hyperparams hp;
    hp.hidden_sizes = {8};
    hp.batch_size = 8;
    hp.max_epochs = 6;
    hp.dropout_rate = 0.2;
    hp.seed = 3;
    const auto split = tiny_split(1);
    const auto a = train_model(split, hp), b = train_model(split, hp);
    EXPECT_EQ(a.train_mse, b.train_mse);
    EXPECT_EQ(a.validation_mse, b.validation_mse);
    EXPECT_EQ(a.model, b.model);
    hp.seed = 4;
    EXPECT_NE(train_model(split, hp).train_mse, a.train_mse);
}

TEST(TrainModel, BestEpochIsMinimumAndPatienceStops) {
    Hyperparams hp;
    hp.hidden_sizes = {8};
    hp.batch_size = 4;
    hp.learning_rate = 0.1;
    hp.max_epochs = 60;
    hp.patience = 0;
    const auto split = tiny_split(2);
    const auto r = train_model(split, hp);
    const auto& v = r.validation_mse;
    EXPECT_EQ(r.best_validation_mse(), *std::min_element(v.begin(), v.end()));
    if (v.size() < hp.max_epochs) {
        // The last epoch is the first one that failed to improve.
        for (std::size_t e = 1; e + 1 < v.size(); ++e) EXPECT_LT(v[e], v[e - 1]);
        EXPECT_GE(v.back(), v[v.size() - 2]);
    }
    EXPECT_EQ(predict(r.model, split.validation).size(), split.validation.size());
    EXPECT_NEAR(mse(predict(r.model, split.validation), [&] {
                    std::vector<double> t;
                    for (const auto& s : split.validation) t.push_back(s.target_adjusted);
                    return t;
                }()),
                r.best_validation_mse(), 1e-9);
}

TEST(TrainModel, RejectsBadSplits) {
    Hyperparams hp;
    hp.hidden_sizes = {8};
    auto split = tiny_split(3);
    auto bad = split;
    bad.validation.front().members = {"a", "b"};
    EXPECT_ERROR_KIND(train_model(bad, hp), ErrorKind::Config);
    bad = split;
    bad.train.clear();
    EXPECT_ERROR_KIND(train_model(bad, hp), ErrorKind::Config);
    hp.learning_rate = 1.0;
    EXPECT_ERROR_KIND(train_model(split, hp), ErrorKind::Config);
}

TEST(TrainModel, LearnsNoiselessCumulativeGddTarget) {
    auto split = split_validation(cum_gdd_dataset(300, 60, 11), 0.2, 1);
    Hyperparams hp;
    hp.hidden_sizes = {8};
    hp.learning_rate = 0.05;
    hp.batch_size = 8;
    hp.max_epochs = 200;
    hp.patience = 200;
    const auto r = train_model(split, hp);
    const double var = variance(split.validation);
    EXPECT_LT(r.best_validation_mse(), 0.01 * var) << "best " << r.best_validation_mse() << " variance " << var;
    EXPECT_LE(r.validation_mse.size(), 200u);
}

TEST(Search, ConfigsDependOnlyOnSeedAndIndex) {
    SearchSpace space;
    for (std::size_t i = 0; i < 50; ++i) {
        const auto hp = sample_config(space, 42, i);
        EXPECT_EQ(hp, sample_config(space, 42, i));
        EXPECT_GE(hp.learning_rate, 1e-4);
        EXPECT_LE(hp.learning_rate, 1e-1);
        EXPECT_TRUE(hp.layers() == 1 || hp.layers() == 2);
        EXPECT_NO_THROW(validate(hp));
    }
    EXPECT_NE(sample_config(space, 42, 0), sample_config(space, 43, 0));
    space.hidden_choices.clear();
    EXPECT_ERROR_KIND(validate(space), ErrorKind::Config);
}

TEST(Search, LearningRateIsLogUniform) {
    SearchSpace space;
    std::size_t below_1e3 = 0;
    const std::size_t n = 4000;
    for (std::size_t i = 0; i < n; ++i) below_1e3 += sample_config(space, 9, i).learning_rate < 1e-3;
    // One of three decades.
    EXPECT_NEAR(static_cast<double>(below_1e3) / n, 1.0 / 3.0, 0.03);
}

TEST(Search, DeterministicBestAndLog) {
    SearchSpace space;
    space.layer_choices = {1};
    space.hidden_choices = {8};
    space.batch_size = 8;
    space.max_epochs = 3;
    space.patience = 1;
    const auto split = tiny_split(4);
    const auto a = random_search(space, 4, 42, split);
    const auto b = random_search(space, 4, 42, split, 2);
    ASSERT_EQ(a.trials.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(a.trials[i].index, i);
        EXPECT_EQ(a.trials[i].validation_mse, b.trials[i].validation_mse);
        EXPECT_LE(a.trials[a.best].validation_mse, a.trials[i].validation_mse);
    }
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.best_report.model, b.best_report.model);

    cornyield::testing::TempDir dir;
    write_trial_log(a, dir / "a.csv");
    write_trial_log(b, dir / "b.csv");
    const auto text = cornyield::testing::read_text(dir / "a.csv");
    EXPECT_EQ(text, cornyield::testing::read_text(dir / "b.csv"));
    EXPECT_EQ(text.rfind("# ", 0), 0u);
    const auto table = csv::Table::parse(text.substr(text.find('\n') + 1), "trials", "test");
    ASSERT_EQ(table.rows(), 4u);
    EXPECT_EQ(table.header(), (std::vector<std::string>{"trial", "seed", "lr", "layers", "hidden", "dropout",
                                                        "val_mse", "epochs", "wall_s"}));
    double min_val = INFINITY;
    for (std::size_t r = 0; r < 4; ++r) min_val = std::min(min_val, table.number(r, 6));
    EXPECT_EQ(min_val, a.trials[a.best].validation_mse);

    const auto single = random_search(space, 1, 5, split);
    EXPECT_EQ(single.best, 0u);
    EXPECT_ERROR_KIND(random_search(space, 0, 5, split), ErrorKind::Config);
}

TEST(Hyperparams, HiddenRoundTripAndValidation) {
    EXPECT_EQ(hidden_to_string({32, 16}), "32-16");
    EXPECT_EQ(parse_hidden("32-16"), (std::vector<std::size_t>{32, 16}));
    EXPECT_EQ(parse_hidden("64"), (std::vector<std::size_t>{64}));
    EXPECT_ERROR_KIND(parse_hidden("x"), ErrorKind::Config);
    Hyperparams hp;
    hp.hidden_sizes = {4};
    EXPECT_ERROR_KIND(validate(hp), ErrorKind::Config);
    hp.hidden_sizes = {32};
    hp.dropout_rate = 0.6;
    EXPECT_ERROR_KIND(validate(hp), ErrorKind::Config);
}
