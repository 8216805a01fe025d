#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cornyield {

// ---------------------------------------------------------------------------
// Growing-season calendar. Day index 0 is April 1, index 213 is October 31.
// The window never contains Feb 29, so every year has 214 days.
// ---------------------------------------------------------------------------
namespace season {

inline constexpr int kFirstMonth = 4;
inline constexpr int kLastMonth = 10;
inline constexpr std::size_t kDays = 214;
inline constexpr std::array<std::size_t, 7> kMonthLength = {30, 31, 30, 31, 31, 30, 31};
inline constexpr std::array<std::size_t, 7> kMonthStart = {0, 30, 61, 91, 122, 153, 183};

// Truncation lengths used for early prediction: data through the end of
// July, August, September and the full season.
inline constexpr std::array<std::size_t, 4> kTruncations = {122, 153, 183, 214};

// July occupies day indices [91, 122).
inline constexpr std::size_t kJulyBegin = 91;
inline constexpr std::size_t kJulyEnd = 122;

bool is_valid_truncation(std::size_t t);

// Day index of a calendar date, or nullopt when outside April 1 - October 31.
std::optional<std::size_t> day_index(std::chrono::year_month_day date);
std::chrono::year_month_day date_of(int year, std::size_t day_index);

std::string format_date(std::chrono::year_month_day date);
// Strict YYYY-MM-DD.
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);

}  // namespace season

// ---------------------------------------------------------------------------
// Domain records
// ---------------------------------------------------------------------------

struct DailyWeather {
    std::chrono::year_month_day date{};
    double tmax_f = 0.0;
    double tmin_f = 0.0;
    double tmean_f = 0.0;
    double rain_in = 0.0;
    double rain_max_in = 0.0;
    double wind_mph = 0.0;

    bool operator==(const DailyWeather&) const = default;
};

// Empty string when the record is consistent, otherwise a description of
// the first violated constraint.
std::string check_invariants(const DailyWeather& w);

enum class SoilAttr : std::size_t {
    Ffd,
    SandTotal,
    SiltTotal,
    ClayTotal,
    Om,
    BulkDensity,
    Lep,
    Caco3,
    Ec,
    Soc0_150,
    Rootznaws,
    Droughty,
    Sand,
    ShareCropland,
};

inline constexpr std::size_t kSoilAttrCount = 14;
inline constexpr std::array<std::string_view, kSoilAttrCount> kSoilAttrNames = {
    "ffd", "sandtotal", "silttotal", "claytotal", "om", "bulkDensity", "lep",
    "caco3", "ec", "soc0_150", "rootznaws", "droughty", "sand", "share_cropland"};

std::string_view soil_attr_name(SoilAttr a);

struct SoilProfile {
    std::array<double, kSoilAttrCount> values{};

    double operator[](SoilAttr a) const { return values[static_cast<std::size_t>(a)]; }
    double& operator[](SoilAttr a) { return values[static_cast<std::size_t>(a)]; }
    bool operator==(const SoilProfile&) const = default;
};

struct CountyMeta {
    std::string county_id;
    std::string crd_id;
    SoilProfile soil;
    std::optional<double> harvested_acres;

    bool operator==(const CountyMeta&) const = default;
};

std::string check_invariants(const CountyMeta& c);

struct PdsiSeries {
    std::string crd_id;
    // (year, month) -> index value in [-10, 10]
    std::map<std::pair<int, int>, double> values;

    std::optional<double> at(int year, int month) const;
    bool operator==(const PdsiSeries&) const = default;
};

struct YieldRecord {
    std::string county_id;
    int year = 0;
    double yield_bu_ac = 0.0;

    bool operator==(const YieldRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Dense containers
// ---------------------------------------------------------------------------

// Row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// One (county or county combination, year) record: an F x T feature matrix
// (feature-major, each row a daily series) and the de-trended target.
struct Sample {
    std::string key;
    std::vector<std::string> members;  // one entry for a real county
    int year = 0;
    Matrix features;
    double target_adjusted = 0.0;

    bool is_combination() const noexcept { return members.size() > 1; }
    std::size_t feature_count() const noexcept { return features.rows(); }
    std::size_t time_len() const noexcept { return features.cols(); }

    bool operator==(const Sample&) const = default;
};

// Keeps day indices [0, new_t) of every feature row.
Sample truncate_time(const Sample& s, std::size_t new_t);

// Samples x features x days, stored with the sample index outermost and the
// day index innermost so each per-feature daily series is contiguous.
class FeatureTensor {
public:
    FeatureTensor(std::size_t features, std::size_t time_len, std::size_t samples);

    std::size_t features() const noexcept { return features_; }
    std::size_t time_len() const noexcept { return time_len_; }
    std::size_t samples() const noexcept { return samples_; }

    double& at(std::size_t n, std::size_t f, std::size_t t) { return data_[index(n, f, t)]; }
    double at(std::size_t n, std::size_t f, std::size_t t) const { return data_[index(n, f, t)]; }

    // Contiguous F x T block of one sample.
    std::span<const double> sample(std::size_t n) const;
    std::span<double> sample(std::size_t n);

    std::span<const double> data() const noexcept { return data_; }
    std::vector<std::string>& feature_names() noexcept { return feature_names_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    FeatureTensor truncate_time(std::size_t new_t) const;

    bool operator==(const FeatureTensor&) const = default;

private:
    std::size_t index(std::size_t n, std::size_t f, std::size_t t) const noexcept {
        return (n * features_ + f) * time_len_ + t;
    }

    std::size_t features_;
    std::size_t time_len_;
    std::size_t samples_;
    std::vector<double> data_;
    std::vector<std::string> feature_names_;
};

}  // namespace cornyield
