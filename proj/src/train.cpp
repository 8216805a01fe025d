#include "cornyield/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "cornyield/csv.hpp"
#include "cornyield/error.hpp"
#include "cornyield/log.hpp"
#include "cornyield/rng.hpp"

namespace cornyield::train {

namespace {

constexpr std::string_view kModule = "train";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void add_scaled(lstm::Params& dst, const lstm::Params& src, double scale) {
    std::vector<std::span<const double>> src_blocks;
    lstm::for_each_block(src, [&](const std::string&, std::span<const double> v) { src_blocks.push_back(v); });
    std::size_t k = 0;
    lstm::for_each_block(dst, [&](const std::string&, std::span<double> v) {
        const auto s = src_blocks[k++];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += scale * s[i];
    });
}

}  // namespace

void validate(const Hyperparams& hp) {
    if (!(hp.learning_rate >= 1e-4 && hp.learning_rate <= 1e-1)) {
        fail(ErrorKind::Config, "learning rate must lie in [1e-4, 1e-1]");
    }
    if (hp.hidden_sizes.empty() || hp.hidden_sizes.size() > 2) fail(ErrorKind::Config, "layers must be 1 or 2");
    for (auto h : hp.hidden_sizes) {
        if (h < 8 || h > 256) fail(ErrorKind::Config, "hidden sizes must lie in [8, 256]");
    }
    if (!(hp.dropout_rate >= 0.0 && hp.dropout_rate <= 0.5)) fail(ErrorKind::Config, "dropout must lie in [0, 0.5]");
    if (hp.batch_size == 0) fail(ErrorKind::Config, "batch size must be positive");
    if (hp.max_epochs == 0) fail(ErrorKind::Config, "max epochs must be positive");
    if (!(hp.clip_norm > 0.0)) fail(ErrorKind::Config, "clip norm must be positive");
}

std::string hidden_to_string(const std::vector<std::size_t>& hidden) {
    std::string out;
    for (auto h : hidden) {
        if (!out.empty()) out += '-';
        out += std::to_string(h);
    }
    return out;
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& piece : csv::split(text, '-')) {
        std::size_t v = 0;
        try {
            std::size_t used = 0;
            v = std::stoul(piece, &used);
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "bad hidden size list \"" + text + "\"");
        }
        out.push_back(v);
    }
    return out;
}

double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) {
        fail(ErrorKind::Shape, "mse of " + std::to_string(pred.size()) + " predictions and " +
                                   std::to_string(target.size()) + " targets");
    }
    if (pred.empty()) fail(ErrorKind::Shape, "mse of empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

BpttResult bptt(std::span<const Sample* const> batch, const lstm::LstmModel& model,
                std::span<const std::uint64_t> dropout_seeds) {
    if (batch.empty()) fail(ErrorKind::Shape, "empty batch");
    if (!dropout_seeds.empty() && dropout_seeds.size() != batch.size()) {
        fail(ErrorKind::Shape, "one dropout seed per batch sample required");
    }
    const auto mode = dropout_seeds.empty() ? lstm::Mode::Infer : lstm::Mode::Train;
    const double n = static_cast<double>(batch.size());

    BpttResult out;
    out.gradient = model.params.zeros_like();
    out.predictions.reserve(batch.size());
    lstm::ForwardCache cache;
    double sq = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Sample& s = *batch[k];
        const double pred =
            lstm::forward(s.features, model, mode, dropout_seeds.empty() ? 0 : dropout_seeds[k], &cache);
        const double err = pred - s.target_adjusted;
        sq += err * err;
        out.predictions.push_back(pred);
        lstm::backward(cache, model, 2.0 * err / n, out.gradient);
    }
    out.loss = sq / n;
    lstm::for_each_block(out.gradient, [](const std::string& name, std::span<const double> v) {
        for (double g : v) {
            if (!std::isfinite(g)) fail(ErrorKind::Numeric, "non-finite gradient in block " + name);
        }
    });
    return out;
}

double global_norm(const lstm::Params& grad) {
    double s = 0.0;
    lstm::for_each_block(grad, [&](const std::string&, std::span<const double> v) {
        for (double g : v) s += g * g;
    });
    return std::sqrt(s);
}

double sgd_step(lstm::LstmModel& model, const lstm::Params& grad, double lr, double clip) {
    if (!std::isfinite(lr) || lr < 0.0) fail(ErrorKind::Config, "learning rate must be finite and non-negative");
    const double norm = global_norm(grad);
    const double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
    if (lr != 0.0 && norm != 0.0) add_scaled(model.params, grad, -lr * scale);
    return norm;
}

Split split_validation(std::vector<Sample> samples, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::Config, "validation fraction must lie in (0, 1)");
    std::vector<std::size_t> originals;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].is_combination()) originals.push_back(i);
    }
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(originals.size())));
    if (n_val == 0 || n_val >= originals.size()) {
        fail(ErrorKind::Config, "cannot split " + std::to_string(originals.size()) + " original samples");
    }
    Rng rng(Rng::derive(seed, 0x5eed));
    // Partial Fisher-Yates: the first n_val entries become the validation set.
    for (std::size_t i = 0; i < n_val; ++i) {
        const auto j = i + rng.below(originals.size() - i);
        std::swap(originals[i], originals[j]);
    }
    std::vector<bool> is_val(samples.size(), false);
    for (std::size_t i = 0; i < n_val; ++i) is_val[originals[i]] = true;
    Split split;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (is_val[i] ? split.validation : split.train).push_back(std::move(samples[i]));
    }
    return split;
}

lstm::NormStats compute_norm_stats(std::span<const Sample> samples) {
    if (samples.empty()) fail(ErrorKind::Config, "no samples for normalization statistics");
    const std::size_t f_count = samples.front().feature_count();
    lstm::NormStats stats;
    stats.feature_mean.assign(f_count, 0.0);
    stats.feature_std.assign(f_count, 1.0);
    for (std::size_t f = 0; f < f_count; ++f) {
        double sum = 0.0, count = 0.0;
        for (const auto& s : samples) {
            for (double v : s.features.row(f)) sum += v;
            count += static_cast<double>(s.time_len());
        }
        const double mean = sum / count;
        double ss = 0.0;
        for (const auto& s : samples) {
            for (double v : s.features.row(f)) ss += (v - mean) * (v - mean);
        }
        const double sd = std::sqrt(ss / count);
        stats.feature_mean[f] = mean;
        stats.feature_std[f] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
    }
    double tsum = 0.0;
    for (const auto& s : samples) tsum += s.target_adjusted;
    const double tmean = tsum / static_cast<double>(samples.size());
    double tss = 0.0;
    for (const auto& s : samples) tss += (s.target_adjusted - tmean) * (s.target_adjusted - tmean);
    const double tsd = std::sqrt(tss / static_cast<double>(samples.size()));
    stats.target_mean = tmean;
    stats.target_std = tsd > 0.0 ? tsd : 1.0;
    return stats;
}

std::vector<double> predict(const lstm::LstmModel& model, std::span<const Sample> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    lstm::ForwardCache cache;
    for (const auto& s : samples) out.push_back(lstm::forward(s.features, model, lstm::Mode::Infer, 0, &cache));
    return out;
}

TrainReport train_model(const Split& split, const Hyperparams& hp, const EpochCallback& on_epoch) {
    validate(hp);
    if (split.train.empty()) fail(ErrorKind::Config, "empty training split");
    if (split.validation.empty()) fail(ErrorKind::Config, "empty validation split");
    for (const auto& s : split.validation) {
        if (s.is_combination()) fail(ErrorKind::Config, "validation split contains combination sample " + s.key);
    }
    const std::size_t f_count = split.train.front().feature_count();
    for (const auto* set : {&split.train, &split.validation}) {
        for (const auto& s : *set) {
            if (s.feature_count() != f_count) fail(ErrorKind::Shape, "samples disagree on feature count");
        }
    }

    const auto start = std::chrono::steady_clock::now();
    lstm::LstmModel model =
        lstm::init_params(lstm::Layout{f_count, hp.hidden_sizes}, Rng::derive(hp.seed, 1), hp.dropout_rate);
    model.norm = compute_norm_stats(split.train);

    std::vector<double> val_targets;
    for (const auto& s : split.validation) val_targets.push_back(s.target_adjusted);

    TrainReport report;
    report.model = model;
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<const Sample*> batch;
    std::vector<std::uint64_t> seeds;

    for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
        const std::uint64_t epoch_seed = Rng::derive(hp.seed, 1000 + epoch);
        Rng shuffle(epoch_seed);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += hp.batch_size) {
            const std::size_t end = std::min(order.size(), begin + hp.batch_size);
            batch.clear();
            seeds.clear();
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(&split.train[order[i]]);
                if (hp.dropout_rate > 0.0) seeds.push_back(Rng::derive(epoch_seed, i));
            }
            const auto result = bptt(batch, model, seeds);
            loss_sum += result.loss * static_cast<double>(batch.size());
            sgd_step(model, result.gradient, hp.learning_rate, hp.clip_norm);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double val_loss = mse(predict(model, split.validation), val_targets);
        if (!std::isfinite(val_loss)) fail(ErrorKind::Numeric, "validation loss diverged");
        report.train_mse.push_back(train_loss);
        report.validation_mse.push_back(val_loss);
        if (on_epoch) on_epoch(epoch, train_loss, val_loss);

        if (val_loss < best) {
            best = val_loss;
            report.best_epoch = epoch;
            report.model = model;
            stale = 0;
        } else if (++stale > hp.patience) {
            break;
        }
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

GradCheckReport grad_check(const GradCheckConfig& config, std::uint64_t seed, const GradientHook& hook) {
    Rng rng(Rng::derive(seed, 77));
    lstm::LstmModel model =
        lstm::init_params(lstm::Layout{config.input_size, config.hidden_sizes}, Rng::derive(seed, 1),
                          config.dropout_rate);
    // Perturb biases and normalization away from their structured defaults
    // so every code path carries a generic value.
    for (auto& layer : model.params.layers) {
        for (double& b : layer.b) b += rng.uniform(-0.5, 0.5);
    }
    model.params.head_b = rng.uniform(-0.5, 0.5);
    for (std::size_t f = 0; f < config.input_size; ++f) {
        model.norm.feature_mean[f] = rng.uniform(-1.0, 1.0);
        model.norm.feature_std[f] = rng.uniform(0.5, 2.0);
    }
    model.norm.target_mean = rng.uniform(-1.0, 1.0);
    model.norm.target_std = rng.uniform(0.5, 2.0);

    std::vector<Sample> samples(config.batch);
    for (auto& s : samples) {
        s.features = Matrix(config.input_size, config.time_len);
        for (double& v : s.features.data()) v = rng.normal(0.0, 1.5);
        s.target_adjusted = rng.normal(0.0, 2.0);
        s.members = {"grad"};
    }
    std::vector<const Sample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    std::vector<std::uint64_t> seeds;
    if (config.dropout_rate > 0.0) {
        for (std::size_t k = 0; k < batch.size(); ++k) seeds.push_back(Rng::derive(seed, 500 + k));
    }

    GradCheckReport report;
    report.parameters = model.params.count();
    if (report.parameters > 5000) fail(ErrorKind::Config, "gradient check limited to 5000 parameters");

    auto analytic = bptt(batch, model, seeds).gradient;
    if (hook) hook(analytic);

    auto loss_at = [&](const lstm::LstmModel& m) { return bptt(batch, m, seeds).loss; };

    std::vector<std::pair<std::string, std::span<const double>>> grads;
    lstm::for_each_block(analytic, [&](const std::string& name, std::span<const double> v) {
        grads.emplace_back(name, v);
    });
    lstm::LstmModel probe = model;
    std::size_t block = 0;
    lstm::for_each_block(probe.params, [&](const std::string& name, std::span<double> v) {
        const auto g = grads[block++].second;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + config.epsilon;
            const double up = loss_at(probe);
            v[i] = saved - config.epsilon;
            const double down = loss_at(probe);
            v[i] = saved;
            const double numeric = (up - down) / (2.0 * config.epsilon);
            const double denom = std::max({std::abs(g[i]), std::abs(numeric), 1e-7});
            const double rel = std::abs(g[i] - numeric) / denom;
            if (rel > report.max_relative_error || report.worst_block.empty()) {
                report.max_relative_error = std::max(rel, report.max_relative_error);
                if (rel >= report.max_relative_error) {
                    report.worst_block = name;
                    report.worst_index = i;
                }
            }
        }
    });
    report.passed = report.max_relative_error < config.tolerance;
    return report;
}

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

void validate(const SearchSpace& space) {
    if (!(space.lr_min > 0.0 && space.lr_min <= space.lr_max)) fail(ErrorKind::Config, "invalid learning-rate range");
    if (space.layer_choices.empty()) fail(ErrorKind::Config, "search space has no layer choices");
    if (space.hidden_choices.empty()) fail(ErrorKind::Config, "search space has no hidden-size choices");
    if (space.dropout_choices.empty()) fail(ErrorKind::Config, "search space has no dropout choices");
}

Hyperparams sample_config(const SearchSpace& space, std::uint64_t seed, std::size_t index) {
    validate(space);
    Rng rng(Rng::derive(seed, 0xC0FFEE + index));
    Hyperparams hp;
    hp.learning_rate = std::exp(rng.uniform(std::log(space.lr_min), std::log(space.lr_max)));
    const std::size_t layers = space.layer_choices[rng.below(space.layer_choices.size())];
    hp.hidden_sizes.clear();
    for (std::size_t k = 0; k < layers; ++k) hp.hidden_sizes.push_back(space.hidden_choices[rng.below(space.hidden_choices.size())]);
    hp.dropout_rate = space.dropout_choices[rng.below(space.dropout_choices.size())];
    hp.batch_size = space.batch_size;
    hp.max_epochs = space.max_epochs;
    hp.patience = space.patience;
    hp.seed = Rng::derive(seed, index);
    return hp;
}

SearchResult random_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Split& split,
                           std::size_t jobs) {
    if (trials == 0) fail(ErrorKind::Config, "random search needs at least one trial");
    validate(space);
    SearchResult result;
    result.trials.resize(trials);
    std::vector<std::optional<TrainReport>> reports(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        result.trials[i].index = i;
        result.trials[i].hp = sample_config(space, seed, i);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < trials; i = next++) {
            Trial& trial = result.trials[i];
            const auto start = std::chrono::steady_clock::now();
            try {
                auto report = train_model(split, trial.hp);
                trial.validation_mse = report.best_validation_mse();
                trial.epochs = report.validation_mse.size();
                reports[i] = std::move(report);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Numeric) throw;
                log::warn("trial " + std::to_string(i) + " diverged: " + e.what());
                trial.validation_mse = std::numeric_limits<double>::infinity();
            }
            trial.wall_seconds = seconds_since(start);
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, trials));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) {
            pool.emplace_back([&, j] {
                try {
                    worker();
                } catch (...) {
                    errors[j] = std::current_exception();
                    next = trials;
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    for (std::size_t i = 1; i < trials; ++i) {
        if (result.trials[i].validation_mse < result.trials[result.best].validation_mse) result.best = i;
    }
    if (!reports[result.best]) fail(ErrorKind::Numeric, "every search trial diverged");
    result.best_report = std::move(*reports[result.best]);
    return result;
}

void write_trial_log(const SearchResult& result, const std::filesystem::path& path, bool include_wall_time,
                     const std::string& split_note) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
        out << "# " << split_note << '\n';
        out << "trial,seed,lr,layers,hidden,dropout,val_mse,epochs,wall_s\n";
        for (const auto& t : result.trials) {
            out << t.index << ',' << t.hp.seed << ',' << csv::format_exact(t.hp.learning_rate) << ','
                << t.hp.layers() << ',' << hidden_to_string(t.hp.hidden_sizes) << ','
                << csv::format_exact(t.hp.dropout_rate) << ','
                << (std::isfinite(t.validation_mse) ? csv::format_exact(t.validation_mse) : std::string("inf"))
                << ',' << t.epochs << ',' << (include_wall_time ? csv::format_fixed(t.wall_seconds, 3) : "")
                << '\n';
        }
        if (!out) fail(ErrorKind::Io, "failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace cornyield::train
