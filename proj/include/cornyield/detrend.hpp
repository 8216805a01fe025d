#pragma once

#include <string>
#include <string_view>

namespace cornyield::detrend {

enum class TrendKind { Percentage, Constant };

std::string_view to_string(TrendKind kind);
TrendKind parse_trend_kind(std::string_view text);

// Genetic-gain trend used to bring historical yields onto a common base year.
//
// Percentage compounds `rate` per year. Constant adds a fixed bu/ac gain per
// year step: the step from year y to y+1 gains `gain_pre2000` when y < 2000
// and `gain_post2000` otherwise.
struct TrendModel {
    TrendKind kind = TrendKind::Percentage;
    int base_year = 2013;
    double rate = 0.015;
    double gain_pre2000 = 2.5;
    double gain_post2000 = 4.67;

    bool operator==(const TrendModel&) const = default;
};

void validate(const TrendModel& m);

// Yield of `year` expressed in base-year terms. Years after the base year are
// rejected.
double adjust(double yield_bu_ac, int year, const TrendModel& m);

// Inverse of adjust: a base-year figure expressed in `year`'s own terms.
double invert(double adjusted_bu_ac, int year, const TrendModel& m);

// Total constant gain accumulated over the steps year -> base_year.
double cumulative_gain(int year, const TrendModel& m);

std::string describe(const TrendModel& m);

}  // namespace cornyield::detrend
