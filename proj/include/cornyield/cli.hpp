#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cornyield/augment.hpp"
#include "cornyield/detrend.hpp"
#include "cornyield/ingest.hpp"
#include "cornyield/train.hpp"

namespace cornyield::cli {

inline constexpr std::string_view kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct RunConfig {
    // Inputs. Unset paths default to <out_dir>/data/<name>.csv, where synth
    // writes them.
    std::optional<std::filesystem::path> weather, yield, soil, pdsi, crd_map;
    std::optional<std::filesystem::path> usda;
    std::filesystem::path out_dir = "run";

    detrend::TrendKind trend = detrend::TrendKind::Percentage;
    std::optional<int> base_year;  // defaults to the last test year
    std::string feature_set = "best10";
    augment::Mode augment = augment::Mode::None;
    std::size_t time_len = 214;
    ingest::YearRange train_years{1980, 2012};
    ingest::YearRange test_years{2013, 2016};
    double validation_fraction = 0.1;
    ingest::Impute impute = ingest::Impute::None;
    std::size_t max_gap_days = 3;

    train::Hyperparams hp;
    train::SearchSpace space;
    std::size_t trials = 30;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;

    std::size_t select_k = 10;
    std::size_t select_bins = 10;
    std::string select_summary = "mean";
    double prune_threshold = 0.9;

    std::vector<int> synth_crd_sizes;  // empty: 9 CRDs of 11 counties
    double synth_noise_sd = 3.0;

    detrend::TrendModel trend_model() const;
    ingest::InputPaths input_paths() const;
    std::filesystem::path crd_map_path() const;
};

// Applies one key=value assignment; unknown keys and bad values raise a
// usage error naming the key.
void apply(RunConfig& cfg, const std::string& key, const std::string& value,
           const std::filesystem::path& base_dir = {});

// Flat key=value file; '#' starts a comment. Relative paths resolve against
// the file's directory.
RunConfig load_config(const std::filesystem::path& path);

// Checks cross-field invariants (disjoint years, T in the truncation set,
// hyperparameter ranges).
void validate(const RunConfig& cfg);

// Every key=value in sorted order, defaults resolved.
std::string canonical_text(const RunConfig& cfg);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

// T for a --month value: aug 122, sep 153, oct 183, final 214.
std::size_t month_to_days(const std::string& month);

// Entry point shared by the binary and the tests. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cornyield::cli
