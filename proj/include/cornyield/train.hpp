#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cornyield/core.hpp"
#include "cornyield/lstm.hpp"

namespace cornyield::train {

struct Hyperparams {
    double learning_rate = 0.01;
    std::vector<std::size_t> hidden_sizes = {32};  // one entry per layer
    double dropout_rate = 0.0;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 500;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;

    std::size_t layers() const noexcept { return hidden_sizes.size(); }
    bool operator==(const Hyperparams&) const = default;
};

// learning rate in [1e-4, 1e-1], 1-2 layers of 8-256 units, dropout in
// [0, 0.5], positive batch size and epoch budget.
void validate(const Hyperparams& hp);

std::string hidden_to_string(const std::vector<std::size_t>& hidden);  // "32" or "32-16"
std::vector<std::size_t> parse_hidden(const std::string& text);

double mse(std::span<const double> pred, std::span<const double> target);

struct BpttResult {
    lstm::Params gradient;  // of the batch-mean squared error
    double loss = 0.0;      // batch MSE
    std::vector<double> predictions;
};

// Exact gradient of the batch MSE. Sample k of the batch uses dropout seed
// dropout_seeds[k] in train mode (or infer mode when the span is empty).
// Per-sample contributions are added in batch order.
BpttResult bptt(std::span<const Sample* const> batch, const lstm::LstmModel& model,
                std::span<const std::uint64_t> dropout_seeds = {});

double global_norm(const lstm::Params& grad);

// p <- p - lr * g after rescaling g to `clip` when its global norm exceeds it.
// Returns the norm before clipping.
double sgd_step(lstm::LstmModel& model, const lstm::Params& grad, double lr, double clip = 5.0);

struct Split {
    std::vector<Sample> train;
    std::vector<Sample> validation;
};

// Moves a seeded random `fraction` of the real-county samples into the
// validation set; combination samples always stay in training.
Split split_validation(std::vector<Sample> samples, double fraction, std::uint64_t seed);

// Per-feature mean/std over every day of every sample (std 1 for constant
// features) and target mean/std.
lstm::NormStats compute_norm_stats(std::span<const Sample> samples);

struct TrainReport {
    std::vector<double> train_mse;       // mean batch loss over each epoch
    std::vector<double> validation_mse;  // after each epoch
    std::size_t best_epoch = 0;          // 0-based
    lstm::LstmModel model;               // parameters of the best epoch
    double wall_seconds = 0.0;

    double best_validation_mse() const { return validation_mse.at(best_epoch); }
};

using EpochCallback = std::function<void(std::size_t epoch, double train_mse, double validation_mse)>;

// Mini-batch SGD over seeded per-epoch shuffles. Training stops once the
// validation MSE has failed to improve on its best for more than `patience`
// consecutive epochs (patience 0: stop at the first non-improving epoch) or
// after max_epochs. Deterministic for a given hp.seed.
TrainReport train_model(const Split& split, const Hyperparams& hp, const EpochCallback& on_epoch = {});

std::vector<double> predict(const lstm::LstmModel& model, std::span<const Sample> samples);

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckConfig {
    std::size_t input_size = 3;
    std::vector<std::size_t> hidden_sizes = {4};
    std::size_t time_len = 5;
    std::size_t batch = 2;
    double dropout_rate = 0.0;
    double epsilon = 1e-5;
    double tolerance = 1e-5;
};

struct GradCheckReport {
    bool passed = false;
    double max_relative_error = 0.0;
    std::string worst_block;
    std::size_t worst_index = 0;
    std::size_t parameters = 0;
};

// Lets tests corrupt the analytic gradient before comparison.
using GradientHook = std::function<void(lstm::Params&)>;

// Compares bptt against central differences of the batch MSE for every
// parameter of a random model on random data. Relative error is
// |a - n| / max(|a|, |n|, 1e-7). Parameter count is limited to 5000.
GradCheckReport grad_check(const GradCheckConfig& config, std::uint64_t seed, const GradientHook& hook = {});

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

struct SearchSpace {
    double lr_min = 1e-4;
    double lr_max = 1e-1;
    std::vector<std::size_t> layer_choices = {1, 2};
    std::vector<std::size_t> hidden_choices = {16, 32, 64, 128};
    std::vector<double> dropout_choices = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::size_t batch_size = 64;
    std::size_t max_epochs = 500;
    std::size_t patience = 10;
};

void validate(const SearchSpace& space);

struct Trial {
    std::size_t index = 0;
    Hyperparams hp;
    double validation_mse = 0.0;  // +inf when training diverged
    std::size_t epochs = 0;
    double wall_seconds = 0.0;
};

struct SearchResult {
    std::vector<Trial> trials;  // ordered by trial index
    std::size_t best = 0;
    TrainReport best_report;
};

// Configuration of trial `index`: learning rate log-uniform on
// [lr_min, lr_max], layer count and per-layer width uniform over the
// choices, dropout uniform over its grid. Depends only on (seed, index).
Hyperparams sample_config(const SearchSpace& space, std::uint64_t seed, std::size_t index);

SearchResult random_search(const SearchSpace& space, std::size_t trials, std::uint64_t seed, const Split& split,
                           std::size_t jobs = 1);

// CSV: trial,seed,lr,layers,hidden,dropout,val_mse,epochs,wall_s preceded by
// one '#' comment line describing the validation split. wall_s is left empty
// unless include_wall_time is set, so logs of identical runs are identical.
void write_trial_log(const SearchResult& result, const std::filesystem::path& path, bool include_wall_time = false,
                     const std::string& split_note = "validation: seeded random 10% of original county samples");

}  // namespace cornyield::train
