#include "cornyield/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "cornyield/error.hpp"

namespace cornyield {

namespace season {

bool is_valid_truncation(std::size_t t) {
    return std::find(kTruncations.begin(), kTruncations.end(), t) != kTruncations.end();
}

std::optional<std::size_t> day_index(std::chrono::year_month_day date) {
    if (!date.ok()) return std::nullopt;
    const int month = static_cast<int>(static_cast<unsigned>(date.month()));
    if (month < kFirstMonth || month > kLastMonth) return std::nullopt;
    const auto m = static_cast<std::size_t>(month - kFirstMonth);
    return kMonthStart[m] + static_cast<unsigned>(date.day()) - 1;
}

std::chrono::year_month_day date_of(int year, std::size_t day_index) {
    if (day_index >= kDays) {
        throw Error(ErrorKind::Domain, "core", "day index " + std::to_string(day_index) + " outside season");
    }
    std::size_t m = kMonthStart.size() - 1;
    while (kMonthStart[m] > day_index) --m;
    const auto day = static_cast<unsigned>(day_index - kMonthStart[m] + 1);
    return std::chrono::year_month_day{std::chrono::year{year},
                                       std::chrono::month{static_cast<unsigned>(kFirstMonth + m)},
                                       std::chrono::day{day}};
}

std::string format_date(std::chrono::year_month_day date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        const char* first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, out);
        return ec == std::errc{} && ptr == first + len;
    };
    if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
    std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

}  // namespace season

std::string check_invariants(const DailyWeather& w) {
    const double vals[] = {w.tmax_f, w.tmin_f, w.tmean_f, w.rain_in, w.rain_max_in, w.wind_mph};
    for (double v : vals) {
        if (!std::isfinite(v)) return "non-finite value";
    }
    if (w.tmin_f > w.tmax_f) return "tmin_f > tmax_f";
    if (w.tmean_f < w.tmin_f || w.tmean_f > w.tmax_f) return "tmean_f outside [tmin_f, tmax_f]";
    if (w.rain_in < 0.0) return "rain_in < 0";
    if (w.rain_max_in < 0.0) return "rain_max_in < 0";
    if (w.rain_max_in > w.rain_in) return "rain_max_in > rain_in";
    if (w.wind_mph < 0.0) return "wind_mph < 0";
    return {};
}

std::string_view soil_attr_name(SoilAttr a) { return kSoilAttrNames[static_cast<std::size_t>(a)]; }

std::string check_invariants(const CountyMeta& c) {
    for (std::size_t i = 0; i < kSoilAttrCount; ++i) {
        if (!std::isfinite(c.soil.values[i])) return std::string(kSoilAttrNames[i]) + " is not finite";
    }
    const double droughty = c.soil[SoilAttr::Droughty];
    if (droughty < 0.0 || droughty > 1.0) return "droughty outside [0, 1]";
    const double share = c.soil[SoilAttr::ShareCropland];
    if (share < 0.0 || share > 1.0) return "share_cropland outside [0, 1]";
    if (c.soil[SoilAttr::Rootznaws] < 0.0) return "rootznaws < 0";
    if (c.harvested_acres && !(*c.harvested_acres >= 0.0)) return "harvested_acres < 0";
    return {};
}

std::optional<double> PdsiSeries::at(int year, int month) const {
    auto it = values.find({year, month});
    if (it == values.end()) return std::nullopt;
    return it->second;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Sample truncate_time(const Sample& s, std::size_t new_t) {
    if (new_t == 0 || new_t > s.time_len()) {
        throw Error(ErrorKind::Shape, "core",
                    "cannot truncate " + std::to_string(s.time_len()) + " days to " + std::to_string(new_t));
    }
    Sample out;
    out.key = s.key;
    out.members = s.members;
    out.year = s.year;
    out.target_adjusted = s.target_adjusted;
    out.features = Matrix(s.feature_count(), new_t);
    for (std::size_t f = 0; f < s.feature_count(); ++f) {
        auto src = s.features.row(f);
        std::copy_n(src.begin(), new_t, out.features.row(f).begin());
    }
    return out;
}

FeatureTensor::FeatureTensor(std::size_t features, std::size_t time_len, std::size_t samples)
    : features_(features), time_len_(time_len), samples_(samples) {
    if (features == 0 || time_len == 0 || samples == 0) {
        throw Error(ErrorKind::Shape, "core",
                    "tensor dimensions must be positive, got " + std::to_string(features) + "x" +
                        std::to_string(time_len) + "x" + std::to_string(samples));
    }
    data_.assign(features * time_len * samples, 0.0);
    feature_names_.assign(features, std::string{});
}

std::span<const double> FeatureTensor::sample(std::size_t n) const {
    return {data_.data() + n * features_ * time_len_, features_ * time_len_};
}

std::span<double> FeatureTensor::sample(std::size_t n) {
    return {data_.data() + n * features_ * time_len_, features_ * time_len_};
}

FeatureTensor FeatureTensor::truncate_time(std::size_t new_t) const {
    if (new_t == 0 || new_t > time_len_) {
        throw Error(ErrorKind::Shape, "core",
                    "cannot truncate " + std::to_string(time_len_) + " days to " + std::to_string(new_t));
    }
    FeatureTensor out(features_, new_t, samples_);
    out.feature_names_ = feature_names_;
    for (std::size_t n = 0; n < samples_; ++n) {
        for (std::size_t f = 0; f < features_; ++f) {
            const double* src = data_.data() + index(n, f, 0);
            std::copy_n(src, new_t, out.data_.data() + out.index(n, f, 0));
        }
    }
    return out;
}

}  // namespace cornyield
