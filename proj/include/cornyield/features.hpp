#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cornyield/core.hpp"
#include "cornyield/detrend.hpp"
#include "cornyield/ingest.hpp"

namespace cornyield::features {

// Growing degree days for corn in °F-days: the daily maximum is capped at
// 86°F, the daily minimum raised to 50°F, and the result measured against a
// 50°F base and floored at zero. Throws when tmin_f > tmax_f.
double gdd(double tmax_f, double tmin_f);

// Inclusive prefix sums.
std::vector<double> cumulative(std::span<const double> series);

// Monthly PDSI of April..October repeated once per day of each month.
std::vector<double> broadcast_pdsi(const PdsiSeries& series, int year);

std::vector<double> broadcast_constant(double v);

// Element-wise product.
std::vector<double> interaction(std::span<const double> a, std::span<const double> b);

// Every candidate input variable. The first fourteen mirror SoilAttr.
enum class FeatureId {
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
    Pdsi,
    Tmax,
    Tmin,
    Tmean,
    Rain,
    Wind,
    RainMax,
    Gdd,
    CumGdd,
    CumRain,
    JulyRain,
    JulyTmax,
    TmaxXDroughty,
    TmaxXPdsi,
};

inline constexpr std::size_t kFeatureCount = 28;

std::string_view feature_name(FeatureId id);
FeatureId parse_feature_id(std::string_view name);
bool is_soil(FeatureId id);

struct FeatureSet {
    std::string name;
    std::vector<FeatureId> generators;

    std::size_t size() const noexcept { return generators.size(); }
    std::vector<std::string> names() const;
};

// "best10", "set15", "set16" or "all28".
FeatureSet feature_set(std::string_view name);
std::vector<std::string> feature_set_names();

// One 214-day row per feature id for a single county-season.
std::vector<double> feature_row(FeatureId id, const std::vector<DailyWeather>& days, const CountyMeta& meta,
                                const PdsiSeries& pdsi, int year);

// One sample per yield record whose year lies in `years`, sorted by
// (county_id, year). Targets are de-trended to the trend's base year.
std::vector<Sample> build_samples(const ingest::RawDataset& raw, const detrend::TrendModel& trend,
                                  const FeatureSet& fs, ingest::YearRange years);

// Stacks samples into an F x T x N tensor; targets keep sample order.
std::pair<FeatureTensor, std::vector<double>> to_tensor(std::span<const Sample> samples,
                                                        const std::vector<std::string>& feature_names = {});

}  // namespace cornyield::features
