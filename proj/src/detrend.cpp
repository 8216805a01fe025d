#include "cornyield/detrend.hpp"

#include <cmath>

#include "cornyield/csv.hpp"
#include "cornyield/error.hpp"

namespace cornyield::detrend {

namespace {

constexpr std::string_view kModule = "detrend";
constexpr int kRegimeSwitchYear = 2000;

void check_year(int year, const TrendModel& m) {
    if (year > m.base_year) {
        throw Error(ErrorKind::Domain, kModule,
                    "year " + std::to_string(year) + " is after base year " + std::to_string(m.base_year));
    }
}

double growth_factor(int year, const TrendModel& m) {
    return std::pow(1.0 + m.rate, static_cast<double>(m.base_year - year));
}

}  // namespace

std::string_view to_string(TrendKind kind) {
    return kind == TrendKind::Percentage ? "percentage" : "constant";
}

TrendKind parse_trend_kind(std::string_view text) {
    if (text == "percentage") return TrendKind::Percentage;
    if (text == "constant") return TrendKind::Constant;
    throw Error(ErrorKind::Config, kModule, "unknown trend kind \"" + std::string(text) + "\"");
}

void validate(const TrendModel& m) {
    if (!(m.rate > 0.0) || !(m.gain_pre2000 > 0.0) || !(m.gain_post2000 > 0.0)) {
        throw Error(ErrorKind::Config, kModule, "trend rate and gains must be positive");
    }
}

double cumulative_gain(int year, const TrendModel& m) {
    check_year(year, m);
    // Count steps in each regime, then multiply once so results do not
    // depend on summation order.
    const int pre_end = std::min(m.base_year, kRegimeSwitchYear);
    const int pre_steps = std::max(0, pre_end - year);
    const int post_start = std::max(year, kRegimeSwitchYear);
    const int post_steps = std::max(0, m.base_year - post_start);
    return pre_steps * m.gain_pre2000 + post_steps * m.gain_post2000;
}

double adjust(double yield_bu_ac, int year, const TrendModel& m) {
    check_year(year, m);
    if (year == m.base_year) return yield_bu_ac;
    switch (m.kind) {
        case TrendKind::Percentage: return yield_bu_ac * growth_factor(year, m);
        case TrendKind::Constant: return yield_bu_ac + cumulative_gain(year, m);
    }
    return yield_bu_ac;
}

double invert(double adjusted_bu_ac, int year, const TrendModel& m) {
    check_year(year, m);
    if (year == m.base_year) return adjusted_bu_ac;
    switch (m.kind) {
        case TrendKind::Percentage: return adjusted_bu_ac / growth_factor(year, m);
        case TrendKind::Constant: return adjusted_bu_ac - cumulative_gain(year, m);
    }
    return adjusted_bu_ac;
}

std::string describe(const TrendModel& m) {
    std::string out = std::string(to_string(m.kind)) + " base=" + std::to_string(m.base_year);
    if (m.kind == TrendKind::Percentage) {
        out += " rate=" + csv::format_exact(m.rate);
    } else {
        out += " gain_pre2000=" + csv::format_exact(m.gain_pre2000) +
               " gain_post2000=" + csv::format_exact(m.gain_post2000);
    }
    return out;
}

}  // namespace cornyield::detrend
