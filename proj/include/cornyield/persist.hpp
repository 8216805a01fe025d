#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cornyield/core.hpp"
#include "cornyield/detrend.hpp"
#include "cornyield/lstm.hpp"
#include "cornyield/train.hpp"

namespace cornyield::persist {

inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr std::uint16_t kDatasetVersion = 1;

// Everything needed to predict from raw features.
struct Checkpoint {
    lstm::LstmModel model;
    detrend::TrendModel trend;
    std::string feature_set;
    std::vector<std::string> feature_names;  // one per model input, in order
    std::size_t time_len = season::kDays;
    train::Hyperparams hyperparams;

    bool operator==(const Checkpoint&) const = default;
};

// Byte stream of a checkpoint; identical inputs give identical bytes.
std::string encode(const Checkpoint& ckpt);
Checkpoint decode(const std::string& bytes, const std::string& source = "<memory>");

// Atomic write (temporary file, then rename).
void save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

// Sample cache written by featurize and read by train/search/predict.
struct Dataset {
    std::vector<std::string> feature_names;
    std::string feature_set;
    detrend::TrendModel trend;
    std::vector<Sample> samples;

    bool operator==(const Dataset&) const = default;
};

std::string encode(const Dataset& ds);
Dataset decode_dataset(const std::string& bytes, const std::string& source = "<memory>");
void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Writes `content` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace cornyield::persist
