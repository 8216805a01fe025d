#include "cornyield/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "cornyield/error.hpp"

namespace cornyield::features {

namespace {

constexpr std::string_view kModule = "features";

constexpr double kBaseTempF = 50.0;
constexpr double kCapTempF = 86.0;

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "ffd",  "sandtotal", "silttotal", "claytotal", "om",       "bulkDensity", "lep",       "caco3",
    "ec",   "soc0_150",  "rootznaws", "droughty",  "sand",     "share_cropland", "pdsi",  "tmax",
    "tmin", "tmean",     "rain",      "wind",      "rain_max", "gdd",         "cum_gdd",   "cum_rain",
    "july_rain", "july_tmax", "tmax_x_droughty", "tmax_x_pdsi"};

std::vector<double> column(const std::vector<DailyWeather>& days, double DailyWeather::*field) {
    std::vector<double> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(d.*field);
    return out;
}

std::vector<double> daily_gdd(const std::vector<DailyWeather>& days) {
    std::vector<double> out;
    out.reserve(days.size());
    for (const auto& d : days) out.push_back(gdd(d.tmax_f, d.tmin_f));
    return out;
}

}  // namespace

double gdd(double tmax_f, double tmin_f) {
    if (tmin_f > tmax_f) {
        throw Error(ErrorKind::Domain, kModule,
                    "tmin " + std::to_string(tmin_f) + " exceeds tmax " + std::to_string(tmax_f));
    }
    const double hi = std::min(kCapTempF, tmax_f);
    const double lo = std::max(kBaseTempF, tmin_f);
    return std::max(0.0, (hi + lo) / 2.0 - kBaseTempF);
}

std::vector<double> cumulative(std::span<const double> series) {
    std::vector<double> out(series.size());
    double running = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        running += series[i];
        out[i] = running;
    }
    return out;
}

std::vector<double> broadcast_pdsi(const PdsiSeries& series, int year) {
    std::vector<double> out;
    out.reserve(season::kDays);
    for (std::size_t m = 0; m < season::kMonthLength.size(); ++m) {
        const int month = season::kFirstMonth + static_cast<int>(m);
        const auto v = series.at(year, month);
        if (!v) {
            throw Error(ErrorKind::Gap, kModule,
                        "PDSI for CRD " + series.crd_id + " missing " + std::to_string(year) + "-" +
                            std::to_string(month));
        }
        out.insert(out.end(), season::kMonthLength[m], *v);
    }
    return out;
}

std::vector<double> broadcast_constant(double v) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Domain, kModule, "cannot broadcast a non-finite value");
    return std::vector<double>(season::kDays, v);
}

std::vector<double> interaction(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::Shape, kModule,
                    "interaction of lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

std::string_view feature_name(FeatureId id) { return kNames[static_cast<std::size_t>(id)]; }

FeatureId parse_feature_id(std::string_view name) {
    if (name == "acre_share") return FeatureId::ShareCropland;
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<FeatureId>(i);
    }
    throw Error(ErrorKind::Config, kModule, "unknown feature \"" + std::string(name) + "\"");
}

bool is_soil(FeatureId id) { return static_cast<std::size_t>(id) < kSoilAttrCount; }

std::vector<std::string> FeatureSet::names() const {
    std::vector<std::string> out;
    out.reserve(generators.size());
    for (auto id : generators) out.emplace_back(feature_name(id));
    return out;
}

FeatureSet feature_set(std::string_view name) {
    using F = FeatureId;
    if (name == "best10") {
        return {"best10",
                {F::Tmean, F::Tmax, F::Tmin, F::Rain, F::Wind, F::Pdsi, F::Rootznaws, F::Droughty, F::CumGdd,
                 F::CumRain}};
    }
    if (name == "set15") {
        // acre_share is the share_cropland soil column.
        return {"set15",
                {F::Tmean, F::Rain, F::Wind, F::Pdsi, F::Rootznaws, F::Droughty, F::CumGdd, F::ShareCropland, F::Ffd,
                 F::ClayTotal, F::Om, F::Ec, F::RainMax, F::JulyRain, F::JulyTmax}};
    }
    if (name == "set16") {
        // all28 minus the twelve soil attributes other than rootznaws and
        // droughty. share_cropland is counted among the soil attributes.
        FeatureSet fs{"set16", {}};
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const auto id = static_cast<F>(i);
            if (!is_soil(id) || id == F::Rootznaws || id == F::Droughty) fs.generators.push_back(id);
        }
        return fs;
    }
    if (name == "all28") {
        FeatureSet fs{"all28", {}};
        for (std::size_t i = 0; i < kFeatureCount; ++i) fs.generators.push_back(static_cast<F>(i));
        return fs;
    }
    throw Error(ErrorKind::Config, kModule, "unknown feature set \"" + std::string(name) + "\"");
}

std::vector<std::string> feature_set_names() { return {"best10", "set15", "set16", "all28"}; }

std::vector<double> feature_row(FeatureId id, const std::vector<DailyWeather>& days, const CountyMeta& meta,
                                const PdsiSeries& pdsi, int year) {
    using F = FeatureId;
    if (days.size() != season::kDays) {
        throw Error(ErrorKind::Shape, kModule, "expected 214 weather days, got " + std::to_string(days.size()));
    }
    if (is_soil(id)) return broadcast_constant(meta.soil.values[static_cast<std::size_t>(id)]);
    switch (id) {
        case F::Pdsi: return broadcast_pdsi(pdsi, year);
        case F::Tmax: return column(days, &DailyWeather::tmax_f);
        case F::Tmin: return column(days, &DailyWeather::tmin_f);
        case F::Tmean: return column(days, &DailyWeather::tmean_f);
        case F::Rain: return column(days, &DailyWeather::rain_in);
        case F::Wind: return column(days, &DailyWeather::wind_mph);
        case F::RainMax: return column(days, &DailyWeather::rain_max_in);
        case F::Gdd: return daily_gdd(days);
        case F::CumGdd: return cumulative(daily_gdd(days));
        case F::CumRain: return cumulative(column(days, &DailyWeather::rain_in));
        case F::JulyRain: {
            double total = 0.0;
            for (std::size_t t = season::kJulyBegin; t < season::kJulyEnd; ++t) total += days[t].rain_in;
            return broadcast_constant(total);
        }
        case F::JulyTmax: {
            // Mean of the July daily maxima.
            double total = 0.0;
            for (std::size_t t = season::kJulyBegin; t < season::kJulyEnd; ++t) total += days[t].tmax_f;
            return broadcast_constant(total / static_cast<double>(season::kJulyEnd - season::kJulyBegin));
        }
        case F::TmaxXDroughty:
            return interaction(column(days, &DailyWeather::tmax_f),
                               broadcast_constant(meta.soil[SoilAttr::Droughty]));
        case F::TmaxXPdsi:
            return interaction(column(days, &DailyWeather::tmax_f), broadcast_pdsi(pdsi, year));
        default: break;
    }
    throw Error(ErrorKind::Config, kModule, "unhandled feature id");
}

std::vector<Sample> build_samples(const ingest::RawDataset& raw, const detrend::TrendModel& trend,
                                  const FeatureSet& fs, ingest::YearRange years) {
    std::vector<const YieldRecord*> records;
    for (const auto& y : raw.yields) {
        if (years.contains(y.year)) records.push_back(&y);
    }
    std::sort(records.begin(), records.end(), [](const YieldRecord* a, const YieldRecord* b) {
        return std::tie(a->county_id, a->year) < std::tie(b->county_id, b->year);
    });

    std::vector<Sample> out;
    out.reserve(records.size());
    for (const YieldRecord* rec : records) {
        const auto w = raw.weather.find({rec->county_id, rec->year});
        if (w == raw.weather.end()) {
            throw Error(ErrorKind::Coverage, kModule,
                        "county " + rec->county_id + " year " + std::to_string(rec->year) +
                            " has a yield but no weather");
        }
        const auto meta = raw.counties.find(rec->county_id);
        if (meta == raw.counties.end()) {
            throw Error(ErrorKind::Coverage, kModule, "county " + rec->county_id + " has no soil metadata");
        }
        const auto pdsi = raw.pdsi.find(meta->second.crd_id);
        if (pdsi == raw.pdsi.end()) {
            throw Error(ErrorKind::Coverage, kModule, "CRD " + meta->second.crd_id + " has no PDSI series");
        }

        Sample s;
        s.key = rec->county_id;
        s.members = {rec->county_id};
        s.year = rec->year;
        s.target_adjusted = detrend::adjust(rec->yield_bu_ac, rec->year, trend);
        s.features = Matrix(fs.size(), season::kDays);
        for (std::size_t f = 0; f < fs.size(); ++f) {
            const auto row = feature_row(fs.generators[f], w->second, meta->second, pdsi->second, rec->year);
            std::copy(row.begin(), row.end(), s.features.row(f).begin());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::pair<FeatureTensor, std::vector<double>> to_tensor(std::span<const Sample> samples,
                                                        const std::vector<std::string>& feature_names) {
    if (samples.empty()) throw Error(ErrorKind::Shape, kModule, "no samples to stack");
    const std::size_t f_count = samples.front().feature_count();
    const std::size_t t_len = samples.front().time_len();
    FeatureTensor tensor(f_count, t_len, samples.size());
    std::vector<double> targets;
    targets.reserve(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const Sample& s = samples[n];
        if (s.feature_count() != f_count || s.time_len() != t_len) {
            throw Error(ErrorKind::Shape, kModule,
                        "sample " + s.key + " " + std::to_string(s.year) + " is " +
                            std::to_string(s.feature_count()) + "x" + std::to_string(s.time_len()) + ", expected " +
                            std::to_string(f_count) + "x" + std::to_string(t_len));
        }
        auto block = tensor.sample(n);
        std::copy(s.features.data().begin(), s.features.data().end(), block.begin());
        targets.push_back(s.target_adjusted);
    }
    if (!feature_names.empty()) {
        if (feature_names.size() != f_count) {
            throw Error(ErrorKind::Shape, kModule, "feature name count does not match feature count");
        }
        tensor.feature_names() = feature_names;
    }
    return {std::move(tensor), std::move(targets)};
}

}  // namespace cornyield::features
