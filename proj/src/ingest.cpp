#include "cornyield/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <tuple>

#include "cornyield/error.hpp"
#include "cornyield/features.hpp"
#include "cornyield/log.hpp"
#include "cornyield/rng.hpp"

namespace cornyield::ingest {

namespace {

constexpr std::string_view kModule = "ingest";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

std::string where(const csv::Table& t, std::size_t row) {
    return t.source() + ":" + std::to_string(t.line(row));
}

// Rows of one (county, date). Hourly rows are keyed by hour so the collapse
// visits them in hour order whatever order the file lists them in.
struct DayRows {
    std::size_t first_row = 0;
    bool hourly = false;
    std::map<long, DailyWeather> rows;
};

DailyWeather collapse(const DayRows& day) {
    if (!day.hourly) return day.rows.begin()->second;
    DailyWeather out = day.rows.begin()->second;
    double tmean_sum = 0.0, rain_sum = 0.0, wind_sum = 0.0;
    for (const auto& [hour, w] : day.rows) {
        out.tmax_f = std::max(out.tmax_f, w.tmax_f);
        out.tmin_f = std::min(out.tmin_f, w.tmin_f);
        out.rain_max_in = std::max(out.rain_max_in, w.rain_in);
        tmean_sum += w.tmean_f;
        rain_sum += w.rain_in;
        wind_sum += w.wind_mph;
    }
    const double n = static_cast<double>(day.rows.size());
    out.tmean_f = tmean_sum / n;
    out.rain_in = rain_sum;
    out.wind_mph = wind_sum / n;
    return out;
}

std::string gap_list(const std::string& county, int year, const std::vector<std::size_t>& missing) {
    std::string out = "county " + county + " year " + std::to_string(year) + " missing ";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i) out += ", ";
        out += season::format_date(season::date_of(year, missing[i]));
    }
    if (missing.size() > shown) out += " (+" + std::to_string(missing.size() - shown) + " more)";
    return out;
}

DailyWeather lerp(const DailyWeather& a, const DailyWeather& b, double w) {
    auto mix = [w](double x, double y) { return x + (y - x) * w; };
    DailyWeather out;
    out.tmax_f = mix(a.tmax_f, b.tmax_f);
    out.tmin_f = mix(a.tmin_f, b.tmin_f);
    out.tmean_f = mix(a.tmean_f, b.tmean_f);
    out.rain_in = mix(a.rain_in, b.rain_in);
    out.rain_max_in = mix(a.rain_max_in, b.rain_max_in);
    out.wind_mph = mix(a.wind_mph, b.wind_mph);
    return out;
}

// Fills interior runs of at most max_gap missing days by linear interpolation
// between the bounding observed days. Returns false when a gap cannot be filled.
bool impute_linear(std::vector<std::optional<DailyWeather>>& days, int year, std::size_t max_gap) {
    std::size_t t = 0;
    while (t < days.size()) {
        if (days[t]) {
            ++t;
            continue;
        }
        std::size_t end = t;
        while (end < days.size() && !days[end]) ++end;
        const std::size_t run = end - t;
        if (t == 0 || end == days.size() || run > max_gap) return false;
        const DailyWeather& left = *days[t - 1];
        const DailyWeather& right = *days[end];
        for (std::size_t k = t; k < end; ++k) {
            const double w = static_cast<double>(k - t + 1) / static_cast<double>(run + 1);
            DailyWeather filled = lerp(left, right, w);
            filled.date = season::date_of(year, k);
            days[k] = filled;
        }
        t = end;
    }
    return true;
}

}  // namespace

void validate(const RawDataset& raw) {
    for (const auto& y : raw.yields) {
        if (!raw.counties.contains(y.county_id)) {
            fail(ErrorKind::Coverage, "yield record for county " + y.county_id + " has no soil/CRD metadata");
        }
        if (!(y.yield_bu_ac > 0.0)) {
            fail(ErrorKind::Range, "yield for " + y.county_id + " " + std::to_string(y.year) + " is not positive");
        }
    }
    for (const auto& [id, meta] : raw.counties) {
        if (!raw.pdsi.contains(meta.crd_id)) {
            fail(ErrorKind::Coverage, "county " + id + " belongs to CRD " + meta.crd_id + " which has no PDSI series");
        }
        if (auto problem = check_invariants(meta); !problem.empty()) {
            fail(ErrorKind::Range, "county " + id + ": " + problem);
        }
    }
    for (const auto& [key, days] : raw.weather) {
        if (days.size() != season::kDays) {
            fail(ErrorKind::Gap, "county " + key.first + " year " + std::to_string(key.second) + " has " +
                                     std::to_string(days.size()) + " days, expected 214");
        }
        for (std::size_t t = 0; t < days.size(); ++t) {
            if (days[t].date != season::date_of(key.second, t)) {
                fail(ErrorKind::Gap, "county " + key.first + " year " + std::to_string(key.second) +
                                         " day " + std::to_string(t) + " is out of order");
            }
            if (auto problem = check_invariants(days[t]); !problem.empty()) {
                fail(ErrorKind::Consistency, "county " + key.first + " " + season::format_date(days[t].date) +
                                                 ": " + problem);
            }
        }
    }
    for (const auto& [crd, series] : raw.pdsi) {
        for (const auto& [ym, v] : series.values) {
            if (!(v >= -10.0 && v <= 10.0)) {
                fail(ErrorKind::Range, "PDSI for " + crd + " outside [-10, 10]");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// weather.csv
// ---------------------------------------------------------------------------

WeatherMap parse_weather_csv(const std::filesystem::path& path, const WeatherOptions& opts) {
    return parse_weather(csv::Table::read(path, kModule), opts);
}

WeatherMap parse_weather(const csv::Table& t, const WeatherOptions& opts) {
    const auto c_county = t.require_column("county_id");
    const auto c_date = t.require_column("date");
    const auto c_hour = t.require_column("hour");
    const auto c_tmax = t.require_column("tmax_f");
    const auto c_tmin = t.require_column("tmin_f");
    const auto c_tmean = t.require_column("tmean_f");
    const auto c_rain = t.require_column("rain_in");
    const auto c_rain_max = t.require_column("rain_max_in");
    const auto c_wind = t.require_column("wind_mph");

    std::map<std::pair<std::string, int>, std::map<std::size_t, DayRows>> grouped;

    for (std::size_t r = 0; r < t.rows(); ++r) {
        const std::string county = t.text(r, c_county);
        const auto date = season::parse_date(t.field(r, c_date));
        if (!date) t.fail(r, c_date, "not a valid YYYY-MM-DD date");
        const auto day = season::day_index(*date);
        if (!day) {
            fail(ErrorKind::Range, where(t, r) + ": date " + std::string(t.field(r, c_date)) +
                                       " is outside the April 1 - October 31 window");
        }
        const bool hourly = !t.field(r, c_hour).empty();
        long hour = -1;
        if (hourly) {
            hour = t.integer(r, c_hour);
            if (hour < 0 || hour > 23) t.fail(r, c_hour, "hour must be 0-23");
        }
        DailyWeather w;
        w.date = *date;
        w.tmax_f = t.number(r, c_tmax);
        w.tmin_f = t.number(r, c_tmin);
        w.tmean_f = t.number(r, c_tmean);
        w.rain_in = t.number(r, c_rain);
        w.wind_mph = t.number(r, c_wind);
        if (hourly) {
            w.rain_max_in = w.rain_in;
        } else {
            w.rain_max_in = t.number(r, c_rain_max);
        }
        if (auto problem = check_invariants(w); !problem.empty()) {
            fail(ErrorKind::Consistency, where(t, r) + ": " + problem);
        }

        const int year = static_cast<int>(date->year());
        auto& day_rows = grouped[{county, year}][*day];
        if (day_rows.rows.empty()) {
            day_rows.first_row = r;
            day_rows.hourly = hourly;
        } else if (day_rows.hourly != hourly) {
            fail(ErrorKind::Parse, where(t, r) + ": county " + county + " date " + season::format_date(*date) +
                                       " mixes hourly and daily rows");
        }
        if (!day_rows.rows.emplace(hour, w).second) {
            fail(ErrorKind::Duplicate,
                 where(t, r) + ": duplicate " + (hourly ? "hour " + std::to_string(hour) : std::string("daily row")) +
                     " for county " + county + " date " + season::format_date(*date));
        }
    }

    WeatherMap out;
    for (auto& [key, days] : grouped) {
        const auto& [county, year] = key;
        std::vector<std::optional<DailyWeather>> season_days(season::kDays);
        for (const auto& [day, day_rows] : days) {
            DailyWeather w = collapse(day_rows);
            if (auto problem = check_invariants(w); !problem.empty()) {
                fail(ErrorKind::Consistency, where(t, day_rows.first_row) + ": county " + county + " date " +
                                                 season::format_date(w.date) + " after collapse: " + problem);
            }
            season_days[day] = w;
        }
        std::vector<std::size_t> missing;
        for (std::size_t d = 0; d < season::kDays; ++d) {
            if (!season_days[d]) missing.push_back(d);
        }
        if (!missing.empty()) {
            const bool filled = opts.impute == Impute::Linear &&
                                impute_linear(season_days, year, opts.max_gap_days);
            if (!filled) fail(ErrorKind::Gap, t.source() + ": " + gap_list(county, year, missing));
            log::warn("IMPUTED " + std::to_string(missing.size()) + " weather day(s) by linear interpolation: " +
                      gap_list(county, year, missing));
        }
        auto& list = out[key];
        list.reserve(season::kDays);
        for (auto& d : season_days) list.push_back(*d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// yield.csv
// ---------------------------------------------------------------------------

std::vector<YieldRecord> parse_yield_csv(const std::filesystem::path& path, std::optional<YearRange> years) {
    return parse_yield(csv::Table::read(path, kModule), years);
}

std::vector<YieldRecord> parse_yield(const csv::Table& t, std::optional<YearRange> years) {
    const auto c_county = t.require_column("county_id");
    const auto c_year = t.require_column("year");
    const auto c_yield = t.require_column("yield_bu_ac");

    std::vector<YieldRecord> out;
    out.reserve(t.rows());
    std::map<std::pair<std::string, int>, std::size_t> seen;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        YieldRecord rec;
        rec.county_id = t.text(r, c_county);
        rec.year = static_cast<int>(t.integer(r, c_year));
        rec.yield_bu_ac = t.number(r, c_yield);
        if (!(rec.yield_bu_ac > 0.0)) {
            fail(ErrorKind::Range, where(t, r) + ": yield_bu_ac " + std::string(t.field(r, c_yield)) +
                                       " must be positive");
        }
        if (years && !years->contains(rec.year)) {
            fail(ErrorKind::Range, where(t, r) + ": year " + std::to_string(rec.year) + " outside " +
                                       std::to_string(years->first) + "-" + std::to_string(years->last));
        }
        auto [it, inserted] = seen.emplace(std::pair{rec.county_id, rec.year}, t.line(r));
        if (!inserted) {
            fail(ErrorKind::Duplicate, where(t, r) + ": county " + rec.county_id + " year " +
                                           std::to_string(rec.year) + " already given on line " +
                                           std::to_string(it->second));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// soil.csv
// ---------------------------------------------------------------------------

std::map<std::string, CountyMeta> parse_soil_csv(const std::filesystem::path& path) {
    return parse_soil(csv::Table::read(path, kModule));
}

std::map<std::string, CountyMeta> parse_soil(const csv::Table& t) {
    const auto c_county = t.require_column("county_id");
    const auto c_crd = t.require_column("crd_id");
    std::array<std::size_t, kSoilAttrCount> c_soil{};
    for (std::size_t i = 0; i < kSoilAttrCount; ++i) c_soil[i] = t.require_column(kSoilAttrNames[i]);
    const auto c_acres = t.column("harvested_acres");

    std::map<std::string, CountyMeta> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        CountyMeta meta;
        meta.county_id = t.text(r, c_county);
        meta.crd_id = t.text(r, c_crd);
        for (std::size_t i = 0; i < kSoilAttrCount; ++i) meta.soil.values[i] = t.number(r, c_soil[i]);
        if (c_acres && !t.field(r, *c_acres).empty()) meta.harvested_acres = t.number(r, *c_acres);
        if (auto problem = check_invariants(meta); !problem.empty()) {
            fail(ErrorKind::Range, where(t, r) + ": county " + meta.county_id + ": " + problem);
        }
        const std::string id = meta.county_id;
        if (!out.emplace(id, std::move(meta)).second) {
            fail(ErrorKind::Duplicate, where(t, r) + ": county " + id + " listed twice");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pdsi.csv
// ---------------------------------------------------------------------------

std::map<std::string, PdsiSeries> parse_pdsi_csv(const std::filesystem::path& path) {
    return parse_pdsi(csv::Table::read(path, kModule));
}

std::map<std::string, PdsiSeries> parse_pdsi(const csv::Table& t) {
    const auto c_crd = t.require_column("crd_id");
    const auto c_year = t.require_column("year");
    const auto c_month = t.require_column("month");
    const auto c_value = t.require_column("pdsi");

    std::map<std::string, PdsiSeries> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const std::string crd = t.text(r, c_crd);
        const int year = static_cast<int>(t.integer(r, c_year));
        const long month = t.integer(r, c_month);
        if (month < 1 || month > 12) t.fail(r, c_month, "month must be 1-12");
        const double v = t.number(r, c_value);
        if (v < -10.0 || v > 10.0) {
            fail(ErrorKind::Range, where(t, r) + ": pdsi " + std::string(t.field(r, c_value)) +
                                       " outside [-10, 10]");
        }
        auto& series = out[crd];
        series.crd_id = crd;
        if (!series.values.emplace(std::pair{year, static_cast<int>(month)}, v).second) {
            fail(ErrorKind::Duplicate, where(t, r) + ": CRD " + crd + " " + std::to_string(year) + "-" +
                                           std::to_string(month) + " given twice");
        }
    }
    for (const auto& [crd, series] : out) {
        std::set<int> years;
        for (const auto& [ym, v] : series.values) years.insert(ym.first);
        for (int y : years) {
            for (int m = season::kFirstMonth; m <= season::kLastMonth; ++m) {
                if (!series.at(y, m)) {
                    fail(ErrorKind::Gap, t.source() + ": CRD " + crd + " year " + std::to_string(y) +
                                             " missing month " + std::to_string(m));
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// crd_map.csv
// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> parse_crd_map_csv(const std::filesystem::path& path) {
    return parse_crd_map(csv::Table::read(path, kModule));
}

std::vector<std::pair<std::string, std::string>> parse_crd_map(const csv::Table& t) {
    const auto c_county = t.require_column("county_id");
    const auto c_crd = t.require_column("crd_id");
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) out.emplace_back(t.text(r, c_county), t.text(r, c_crd));
    return out;
}

// ---------------------------------------------------------------------------
// Whole datasets
// ---------------------------------------------------------------------------

RawDataset load_dataset(const InputPaths& paths, const WeatherOptions& opts) {
    RawDataset raw;
    raw.weather = parse_weather_csv(paths.weather, opts);
    raw.yields = parse_yield_csv(paths.yield);
    raw.counties = parse_soil_csv(paths.soil);
    raw.pdsi = parse_pdsi_csv(paths.pdsi);
    validate(raw);
    return raw;
}

InputPaths write_dataset(const RawDataset& raw, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    InputPaths paths{dir / "weather.csv", dir / "yield.csv", dir / "soil.csv", dir / "pdsi.csv"};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, kModule, "cannot write " + p.string());
        return out;
    };
    using csv::format_exact;
    {
        auto out = open(paths.weather);
        out << "county_id,date,hour,tmax_f,tmin_f,tmean_f,rain_in,rain_max_in,wind_mph\n";
        for (const auto& [key, days] : raw.weather) {
            for (const auto& d : days) {
                out << key.first << ',' << season::format_date(d.date) << ",," << format_exact(d.tmax_f) << ','
                    << format_exact(d.tmin_f) << ',' << format_exact(d.tmean_f) << ',' << format_exact(d.rain_in)
                    << ',' << format_exact(d.rain_max_in) << ',' << format_exact(d.wind_mph) << '\n';
            }
        }
    }
    {
        auto out = open(paths.yield);
        out << "county_id,year,yield_bu_ac\n";
        for (const auto& y : raw.yields) {
            out << y.county_id << ',' << y.year << ',' << format_exact(y.yield_bu_ac) << '\n';
        }
    }
    {
        auto out = open(paths.soil);
        out << "county_id,crd_id";
        for (auto name : kSoilAttrNames) out << ',' << name;
        out << ",harvested_acres\n";
        for (const auto& [id, meta] : raw.counties) {
            out << id << ',' << meta.crd_id;
            for (double v : meta.soil.values) out << ',' << format_exact(v);
            out << ',' << (meta.harvested_acres ? format_exact(*meta.harvested_acres) : std::string{}) << '\n';
        }
    }
    {
        auto out = open(paths.pdsi);
        out << "crd_id,year,month,pdsi\n";
        for (const auto& [crd, series] : raw.pdsi) {
            for (const auto& [ym, v] : series.values) {
                out << crd << ',' << ym.first << ',' << ym.second << ',' << format_exact(v) << '\n';
            }
        }
    }
    {
        auto out = open(dir / "crd_map.csv");
        out << "county_id,crd_id\n";
        for (const auto& [id, meta] : raw.counties) out << id << ',' << meta.crd_id << '\n';
    }
    return paths;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

double GroundTruth::evaluate(const std::vector<DailyWeather>& season_days) const {
    double gdd_sum = 0.0, rain_sum = 0.0;
    int heat_days = 0;
    for (const auto& d : season_days) {
        gdd_sum += features::gdd(d.tmax_f, d.tmin_f);
        rain_sum += d.rain_in;
        if (d.tmax_f >= heat_threshold_f) ++heat_days;
    }
    const double y = intercept + gdd_coef * (gdd_sum - gdd_ref) + rain_coef * (rain_sum - rain_ref) -
                     heat_coef * heat_days;
    return std::max(min_yield, y);
}

namespace {

double round_to(double v, double step) { return std::round(v / step) * step; }

struct CountyClimate {
    double temp_offset;
    double rain_factor;
};

}  // namespace

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    std::vector<int> sizes = config.crd_sizes;
    if (sizes.empty() && config.crd_count > 0 && config.counties_per_crd > 0) {
        sizes.assign(static_cast<std::size_t>(config.crd_count), config.counties_per_crd);
    }
    if (sizes.empty() || std::any_of(sizes.begin(), sizes.end(), [](int n) { return n <= 0; })) {
        fail(ErrorKind::Config, "synthetic config needs at least one CRD and one county per CRD");
    }
    if (config.last_year < config.first_year) {
        fail(ErrorKind::Config, "synthetic config year range is empty");
    }
    if (!(config.noise_sd >= 0.0)) fail(ErrorKind::Config, "noise_sd must be non-negative");
    if (config.trend) {
        detrend::validate(*config.trend);
        if (config.last_year > config.trend->base_year) {
            fail(ErrorKind::Config, "synthetic years extend past the trend base year");
        }
    }

    Rng rng(seed);
    SynthResult result;
    result.truth = config.truth;
    RawDataset& raw = result.dataset;

    std::vector<std::string> crd_ids;
    std::vector<std::vector<std::string>> crd_counties(sizes.size());
    std::map<std::string, CountyClimate> climate;
    int fips = 1;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        char crd_buf[32];
        std::snprintf(crd_buf, sizeof crd_buf, "IA-%zu0", c + 1);
        crd_ids.emplace_back(crd_buf);
        // CRDs further down the list run slightly warmer, as going south.
        const double crd_temp = 1.2 * (static_cast<double>(c) - 0.5 * static_cast<double>(sizes.size() - 1)) /
                                std::max<double>(1.0, static_cast<double>(sizes.size() - 1));
        for (int k = 0; k < sizes[c]; ++k) {
            char id_buf[16];
            std::snprintf(id_buf, sizeof id_buf, "19%03d", fips);
            fips += 2;
            const std::string id = id_buf;
            crd_counties[c].push_back(id);
            climate[id] = CountyClimate{crd_temp + rng.normal(0.0, 0.8), rng.uniform(0.85, 1.15)};

            CountyMeta meta;
            meta.county_id = id;
            meta.crd_id = crd_ids.back();
            auto& s = meta.soil;
            s[SoilAttr::Ffd] = round_to(rng.uniform(140.0, 175.0), 0.1);
            s[SoilAttr::SandTotal] = round_to(rng.uniform(10.0, 40.0), 0.01);
            s[SoilAttr::SiltTotal] = round_to(rng.uniform(30.0, 60.0), 0.01);
            s[SoilAttr::ClayTotal] = round_to(rng.uniform(15.0, 35.0), 0.01);
            s[SoilAttr::Om] = round_to(rng.uniform(2.0, 6.0), 0.01);
            s[SoilAttr::BulkDensity] = round_to(rng.uniform(1.2, 1.5), 0.001);
            s[SoilAttr::Lep] = round_to(rng.uniform(2.0, 6.0), 0.01);
            s[SoilAttr::Caco3] = round_to(rng.uniform(0.0, 10.0), 0.01);
            s[SoilAttr::Ec] = round_to(rng.uniform(0.0, 1.0), 0.001);
            s[SoilAttr::Soc0_150] = round_to(rng.uniform(100.0, 250.0), 0.1);
            s[SoilAttr::Rootznaws] = round_to(rng.uniform(180.0, 320.0), 0.1);
            s[SoilAttr::Droughty] = rng.uniform() < 0.2 ? 1.0 : 0.0;
            s[SoilAttr::Sand] = round_to(rng.uniform(5.0, 40.0), 0.01);
            s[SoilAttr::ShareCropland] = round_to(rng.uniform(0.5, 0.95), 0.001);
            meta.harvested_acres = round_to(rng.uniform(60000.0, 250000.0), 10.0);
            raw.counties.emplace(id, std::move(meta));
            result.crd_map.emplace_back(id, crd_ids.back());
        }
    }

    for (int year = config.first_year; year <= config.last_year; ++year) {
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            // Regional anomalies shared by every county of the CRD.
            const double crd_temp_anom = rng.normal(0.0, 1.8);
            const double crd_rain_mult = std::exp(rng.normal(0.0, 0.25));

            auto& series = raw.pdsi[crd_ids[c]];
            series.crd_id = crd_ids[c];
            double pdsi = 2.5 * (crd_rain_mult - 1.0) - 0.3 * crd_temp_anom + rng.normal(0.0, 1.0);
            for (int m = season::kFirstMonth; m <= season::kLastMonth; ++m) {
                pdsi = 0.7 * pdsi + rng.normal(0.0, 0.8) + 0.6 * (crd_rain_mult - 1.0);
                series.values[{year, m}] = round_to(std::clamp(pdsi, -8.0, 8.0), 0.01);
            }

            for (const auto& id : crd_counties[c]) {
                const auto& cc = climate[id];
                const double temp_anom = crd_temp_anom + rng.normal(0.0, 0.5);
                const double rain_mult = crd_rain_mult * std::exp(rng.normal(0.0, 0.1)) * cc.rain_factor;
                std::vector<DailyWeather> days;
                days.reserve(season::kDays);
                double ar = 0.0;
                for (std::size_t t = 0; t < season::kDays; ++t) {
                    const double clim = 50.0 + 25.0 * std::sin(std::numbers::pi * (static_cast<double>(t) + 15.0) / 245.0);
                    ar = 0.7 * ar + rng.normal(0.0, 3.0);
                    const double tmean = clim + cc.temp_offset + temp_anom + ar;
                    const double range = rng.uniform(14.0, 24.0);
                    DailyWeather d;
                    d.date = season::date_of(year, t);
                    d.tmean_f = round_to(tmean, 0.1);
                    d.tmax_f = round_to(tmean + 0.5 * range, 0.1);
                    d.tmin_f = round_to(tmean - 0.5 * range, 0.1);
                    if (rng.uniform() < 0.32) {
                        const double amount = -std::log(1.0 - rng.uniform()) * 0.33 * rain_mult;
                        d.rain_in = round_to(amount, 0.01);
                        d.rain_max_in = round_to(amount * rng.uniform(0.25, 0.9), 0.01);
                    } else {
                        rng.uniform();
                        rng.uniform();
                    }
                    d.wind_mph = round_to(6.0 + 4.0 * rng.uniform() + std::abs(rng.normal(0.0, 2.0)), 0.1);
                    days.push_back(d);
                }
                const double truth = config.truth.evaluate(days);
                const double noisy = std::max(config.truth.min_yield, truth + rng.normal(0.0, config.noise_sd));
                const double observed = config.trend ? detrend::invert(noisy, year, *config.trend) : noisy;
                result.truth_values[{id, year}] = truth;
                raw.yields.push_back(YieldRecord{id, year, observed});
                raw.weather[{id, year}] = std::move(days);
            }
        }
    }
    std::sort(raw.yields.begin(), raw.yields.end(), [](const YieldRecord& a, const YieldRecord& b) {
        return std::tie(a.county_id, a.year) < std::tie(b.county_id, b.year);
    });
    validate(raw);
    return result;
}

}  // namespace cornyield::ingest
