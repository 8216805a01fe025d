#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cornyield/core.hpp"
#include "cornyield/csv.hpp"
#include "cornyield/detrend.hpp"

namespace cornyield::ingest {

// (county_id, year) -> 214 daily records, April 1 through October 31.
using WeatherMap = std::map<std::pair<std::string, int>, std::vector<DailyWeather>>;

struct RawDataset {
    WeatherMap weather;
    std::vector<YieldRecord> yields;
    std::map<std::string, CountyMeta> counties;
    std::map<std::string, PdsiSeries> pdsi;

    bool operator==(const RawDataset&) const = default;
};

// Throws on the first violated cross-file invariant: yield counties without
// metadata, counties whose CRD has no PDSI series, incomplete weather windows.
void validate(const RawDataset& raw);

enum class Impute { None, Linear };

struct WeatherOptions {
    Impute impute = Impute::None;
    std::size_t max_gap_days = 3;  // only consulted with Impute::Linear
};

// Rows with an empty `hour` are daily records and pass through unchanged.
// Rows with an hour 0-23 are collapsed per (county, date): max of tmax_f,
// min of tmin_f, mean of tmean_f, sum of rain_in, max hourly rain_in as
// rain_max_in, mean of wind_mph. A day may not mix both kinds.
WeatherMap parse_weather_csv(const std::filesystem::path& path, const WeatherOptions& opts = {});
WeatherMap parse_weather(const csv::Table& table, const WeatherOptions& opts = {});

struct YearRange {
    int first = 0;
    int last = 0;
    bool contains(int y) const { return y >= first && y <= last; }
};

std::vector<YieldRecord> parse_yield_csv(const std::filesystem::path& path,
                                         std::optional<YearRange> years = std::nullopt);
std::vector<YieldRecord> parse_yield(const csv::Table& table, std::optional<YearRange> years = std::nullopt);

std::map<std::string, CountyMeta> parse_soil_csv(const std::filesystem::path& path);
std::map<std::string, CountyMeta> parse_soil(const csv::Table& table);

std::map<std::string, PdsiSeries> parse_pdsi_csv(const std::filesystem::path& path);
std::map<std::string, PdsiSeries> parse_pdsi(const csv::Table& table);

// county_id,crd_id pairs in file order.
std::vector<std::pair<std::string, std::string>> parse_crd_map_csv(const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> parse_crd_map(const csv::Table& table);

struct InputPaths {
    std::filesystem::path weather;
    std::filesystem::path yield;
    std::filesystem::path soil;
    std::filesystem::path pdsi;
};

RawDataset load_dataset(const InputPaths& paths, const WeatherOptions& opts = {});

// Writes weather.csv (daily rows), yield.csv, soil.csv, pdsi.csv and
// crd_map.csv into `dir`. Numbers use the shortest exact representation so
// parsing the files reproduces `raw` bit for bit.
InputPaths write_dataset(const RawDataset& raw, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

// Ground-truth yield of a synthetic county-year, in base-year terms:
//
//   max(min_yield, intercept + gdd_coef * (sum GDD - gdd_ref)
//                            + rain_coef * (sum rain - rain_ref)
//                            - heat_coef * #days with tmax_f >= heat_threshold_f)
//
// Sums run over the full April-October window.
struct GroundTruth {
    double intercept = 175.0;
    double gdd_coef = 0.05;
    double gdd_ref = 3200.0;
    double rain_coef = 1.2;
    double rain_ref = 22.0;
    double heat_coef = 0.5;
    double heat_threshold_f = 90.0;
    double min_yield = 20.0;

    double evaluate(const std::vector<DailyWeather>& season) const;
};

struct SynthConfig {
    int crd_count = 9;
    int counties_per_crd = 11;
    std::vector<int> crd_sizes;  // overrides the two fields above when non-empty
    int first_year = 1980;
    int last_year = 2016;
    double noise_sd = 3.0;
    // When set, observed yields are `invert(truth + noise, year, trend)`, so
    // de-trending with the same model recovers truth + noise. The base year
    // must not precede last_year.
    std::optional<detrend::TrendModel> trend = detrend::TrendModel{.base_year = 2016};
    GroundTruth truth;
};

struct SynthResult {
    RawDataset dataset;
    GroundTruth truth;
    // Noise-free ground truth per (county, year), base-year terms.
    std::map<std::pair<std::string, int>, double> truth_values;
    std::vector<std::pair<std::string, std::string>> crd_map;
};

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace cornyield::ingest
