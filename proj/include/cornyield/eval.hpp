#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cornyield/core.hpp"

namespace cornyield::eval {

// Best MSE of the published model comparison. It depends on weather data
// that is not distributed, so it is kept for reference only.
inline constexpr double kReferenceBestMse = 191.0535;

// A model output already expressed in harvest-year bu/ac.
struct Prediction {
    std::string county_id;
    int year = 0;
    double value = 0.0;
};

struct CountyRow {
    std::string key;
    int year = 0;
    double predicted = 0.0;
    double actual = 0.0;
    double abs_error = 0.0;

    bool operator==(const CountyRow&) const = default;
};

struct CountyErrors {
    std::vector<CountyRow> rows;  // sorted by (key, year)
    double mse = 0.0;
    double mean_abs_error = 0.0;
    std::map<int, double> mse_by_year;
};

// Joins predictions and actuals on (county, year). Both sides must cover the
// same keys exactly once; combination keys (containing '+') are skipped.
CountyErrors county_errors(std::span<const Prediction> preds, std::span<const YieldRecord> actuals);

// Recomputes MSE and mean absolute error from the rows.
CountyErrors summarize_rows(std::vector<CountyRow> rows);

double weighted_mean(std::span<const double> values, std::span<const double> weights);

enum class Weighting { HarvestedAcres, Unweighted };

std::string_view to_string(Weighting w);

struct StateRow {
    int year = 0;
    double predicted = 0.0;
    double actual = 0.0;  // aggregated from the county actuals

    bool operator==(const StateRow&) const = default;
};

struct StateAggregate {
    std::vector<StateRow> rows;  // ascending year
    Weighting weighting = Weighting::Unweighted;
};

// Acres-weighted mean per year when every county in `rows` has a weight and
// each year's weights sum to a positive value; otherwise the unweighted mean
// (partial weights log a warning).
StateAggregate state_aggregate(std::span<const CountyRow> rows,
                               const std::map<std::string, double>& harvested_acres = {});

struct UsdaEntry {
    double actual = 0.0;
    double usda = 0.0;
};

using UsdaTable = std::map<int, UsdaEntry>;

// year,actual,usda_nov
UsdaTable parse_usda_csv(const std::filesystem::path& path);

struct UsdaComparison {
    int year = 0;
    bool compared = false;  // false when the year is absent from the table
    double actual = 0.0;
    double usda = 0.0;
    double model = 0.0;
    double usda_error = 0.0;   // usda - actual
    double model_error = 0.0;  // model - actual
};

std::vector<UsdaComparison> usda_compare(std::span<const StateRow> state, const UsdaTable& reference);

struct EvalReport {
    CountyErrors county;
    StateAggregate state;
    std::vector<UsdaComparison> usda;
};

// Writes <stem>_county.csv (key,year,pred,actual,abs_err) and
// <stem>_state.csv (year,pred,actual,usda) with four decimals. An empty
// usda cell marks an uncompared year. Returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> emit_plot_csv(const EvalReport& report,
                                                                      const std::filesystem::path& stem);

std::vector<CountyRow> read_county_csv(const std::filesystem::path& path);

}  // namespace cornyield::eval
