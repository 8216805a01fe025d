#include <cmath>

#include "cornyield/features.hpp"
#include "support.hpp"

using namespace cornyield;
using namespace cornyield::features;

namespace {

PdsiSeries ramp_pdsi(int year) {
    PdsiSeries p;
    p.crd_id = "IA-10";
    for (int m = 4; m <= 10; ++m) p.values[{year, m}] = m - 4.0;  // April 0, May 1, ..., October 6
    return p;
}

ingest::SynthResult small_synth(std::uint64_t seed = 5) {
    ingest::SynthConfig cfg;
    cfg.crd_sizes = {2, 3};
    cfg.first_year = 2010;
    cfg.last_year = 2014;
    cfg.trend = detrend::TrendModel{.base_year = 2014};
    return ingest::generate_synthetic(cfg, seed);
}

}  // namespace

TEST(Gdd, WorkedCases) {
    EXPECT_EQ(gdd(86, 50), 18.0);
    EXPECT_EQ(gdd(50, 50), 0.0);
    EXPECT_EQ(gdd(95, 70), 28.0);  // tmax capped at 86: (86 + 70) / 2 - 50
    EXPECT_EQ(gdd(45, 40), 0.0);   // tmin raised to 50, tmax below base
    EXPECT_EQ(gdd(70, 30), 10.0);  // (70 + 50) / 2 - 50
}

TEST(Gdd, BoundedOnRandomDays) {
    Rng rng(17);
    for (int i = 0; i < 100000; ++i) {
        // Both clamps bind at 86: (86 + 86) / 2 - 50 = 36 whenever tmin <= 86.
        const double a = rng.uniform(-20, 120), b = rng.uniform(-20, 86);
        const double v = gdd(std::max(a, b), std::min(a, b));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 36.0);
        if (std::max(a, b) <= 86.0 && std::min(a, b) <= 50.0) EXPECT_LE(v, 18.0);
    }
    EXPECT_ERROR_KIND(gdd(60, 70), ErrorKind::Domain);
}

TEST(Cumulative, PrefixSums) {
    const std::vector<double> x{1, 2, 3, 0, -1};
    EXPECT_EQ(cumulative(x), (std::vector<double>{1, 3, 6, 6, 5}));
    EXPECT_TRUE(cumulative(std::vector<double>{}).empty());

    Rng rng(2);
    std::vector<double> gdds(214);
    for (double& v : gdds) v = gdd(rng.uniform(70, 95), rng.uniform(40, 65));
    const auto c = cumulative(gdds);
    double total = 0;
    for (std::size_t t = 0; t < 214; ++t) {
        total += gdds[t];
        EXPECT_DOUBLE_EQ(c[t], total);
        if (t > 0) EXPECT_GE(c[t], c[t - 1]);
    }
}

TEST(Broadcast, PdsiFollowsMonthBoundaries) {
    const auto row = broadcast_pdsi(ramp_pdsi(2013), 2013);
    ASSERT_EQ(row.size(), 214u);
    for (std::size_t m = 0; m < 7; ++m) {
        const std::size_t begin = season::kMonthStart[m];
        const std::size_t end = begin + season::kMonthLength[m];
        for (std::size_t t = begin; t < end; ++t) EXPECT_EQ(row[t], static_cast<double>(m)) << t;
    }
    EXPECT_EQ(row[29], 0.0);
    EXPECT_EQ(row[30], 1.0);
    EXPECT_EQ(row[121], 3.0);
    EXPECT_EQ(row[122], 4.0);
    EXPECT_EQ(row[213], 6.0);
}

TEST(Broadcast, MissingMonthIsGap) {
    auto p = ramp_pdsi(2013);
    p.values.erase({2013, 8});
    EXPECT_ERROR_KIND(broadcast_pdsi(p, 2013), ErrorKind::Gap);
    EXPECT_ERROR_KIND(broadcast_pdsi(ramp_pdsi(2013), 2014), ErrorKind::Gap);
}

TEST(Broadcast, ConstantAndInteraction) {
    const auto c = broadcast_constant(280.0);
    ASSERT_EQ(c.size(), 214u);
    for (double v : c) EXPECT_EQ(v, 280.0);
    EXPECT_ERROR_KIND(broadcast_constant(NAN), ErrorKind::Domain);

    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    EXPECT_EQ(interaction(a, b), (std::vector<double>{4, 10, 18}));
    EXPECT_ERROR_KIND(interaction(a, std::vector<double>{1, 2}), ErrorKind::Shape);
}

TEST(FeatureSets, SizesAndMembers) {
    EXPECT_EQ(feature_set("best10").size(), 10u);
    EXPECT_EQ(feature_set("set15").size(), 15u);
    EXPECT_EQ(feature_set("set16").size(), 16u);
    EXPECT_EQ(feature_set("all28").size(), 28u);
    EXPECT_ERROR_KIND(feature_set("best11"), ErrorKind::Config);

    const auto best = feature_set("best10").names();
    for (auto n : {"tmean", "tmax", "tmin", "rain", "wind", "pdsi", "rootznaws", "droughty", "cum_gdd", "cum_rain"}) {
        EXPECT_NE(std::find(best.begin(), best.end(), n), best.end()) << n;
    }
    // Every set is duplicate-free and drawn from the 28 generators.
    for (const auto& name : feature_set_names()) {
        auto names = feature_set(name).names();
        std::sort(names.begin(), names.end());
        EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end()) << name;
        for (const auto& n : names) EXPECT_NO_THROW(parse_feature_id(n));
    }
    EXPECT_EQ(parse_feature_id("acre_share"), FeatureId::ShareCropland);
    EXPECT_ERROR_KIND(parse_feature_id("humidity"), ErrorKind::Config);
}

TEST(FeatureRow, DerivedWeatherFeatures) {
    std::vector<DailyWeather> days;
    for (std::size_t t = 0; t < 214; ++t) {
        const double tmax = 70 + static_cast<double>(t % 20);
        days.push_back({season::date_of(2013, t), tmax, 55, 62.5, t >= 91 && t < 122 ? 0.2 : 0.1, 0.05, 4});
    }
    CountyMeta meta;
    meta.county_id = "19001";
    meta.crd_id = "IA-10";
    meta.soil[SoilAttr::Droughty] = 1;
    meta.soil[SoilAttr::Rootznaws] = 250;
    const auto pdsi = ramp_pdsi(2013);

    const auto july_rain = feature_row(FeatureId::JulyRain, days, meta, pdsi, 2013);
    EXPECT_NEAR(july_rain[0], 31 * 0.2, 1e-12);
    EXPECT_EQ(july_rain[0], july_rain[213]);

    double july_tmax = 0;
    for (std::size_t t = 91; t < 122; ++t) july_tmax += days[t].tmax_f;
    EXPECT_NEAR(feature_row(FeatureId::JulyTmax, days, meta, pdsi, 2013)[5], july_tmax / 31, 1e-12);

    const auto cum_gdd = feature_row(FeatureId::CumGdd, days, meta, pdsi, 2013);
    double acc = 0;
    for (std::size_t t = 0; t < 214; ++t) acc += gdd(days[t].tmax_f, days[t].tmin_f);
    EXPECT_NEAR(cum_gdd[213], acc, 1e-9);

    const auto tx_pdsi = feature_row(FeatureId::TmaxXPdsi, days, meta, pdsi, 2013);
    EXPECT_EQ(tx_pdsi[100], days[100].tmax_f * 3.0);
    EXPECT_EQ(feature_row(FeatureId::TmaxXDroughty, days, meta, pdsi, 2013)[7], days[7].tmax_f);
    EXPECT_EQ(feature_row(FeatureId::Rootznaws, days, meta, pdsi, 2013)[100], 250.0);

    days.pop_back();
    EXPECT_ERROR_KIND(feature_row(FeatureId::Tmax, days, meta, pdsi, 2013), ErrorKind::Shape);
}

TEST(BuildSamples, SortedDetrendedAndComplete) {
    const auto r = small_synth();
    const auto trend = detrend::TrendModel{.base_year = 2014};
    const auto fs = feature_set("best10");
    const auto samples = build_samples(r.dataset, trend, fs, {2010, 2013});
    ASSERT_EQ(samples.size(), 5u * 4u);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        EXPECT_LT(std::tie(samples[i - 1].key, samples[i - 1].year), std::tie(samples[i].key, samples[i].year));
    }
    for (const auto& s : samples) {
        EXPECT_EQ(s.feature_count(), 10u);
        EXPECT_EQ(s.time_len(), 214u);
        EXPECT_FALSE(s.is_combination());
        const auto rec = std::find_if(r.dataset.yields.begin(), r.dataset.yields.end(),
                                      [&](const YieldRecord& y) { return y.county_id == s.key && y.year == s.year; });
        ASSERT_NE(rec, r.dataset.yields.end());
        EXPECT_EQ(s.target_adjusted, detrend::adjust(rec->yield_bu_ac, s.year, trend));
        for (double v : s.features.data()) EXPECT_TRUE(std::isfinite(v));
    }
}

TEST(BuildSamples, MissingWeatherIsCoverageError) {
    auto r = small_synth();
    r.dataset.weather.erase(r.dataset.weather.begin());
    EXPECT_ERROR_KIND(build_samples(r.dataset, detrend::TrendModel{.base_year = 2014}, feature_set("best10"),
                                    {2010, 2014}),
                      ErrorKind::Coverage);
}

TEST(ToTensor, ProbeMatchesSourceSamples) {
    Rng rng(8);
    std::vector<Sample> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(cornyield::testing::random_sample(rng, 3, 214, "c" + std::to_string(i)));
    const auto [tensor, targets] = to_tensor(samples, {"a", "b", "c"});
    EXPECT_EQ(tensor.samples(), 6u);
    EXPECT_EQ(tensor.features(), 3u);
    EXPECT_EQ(tensor.time_len(), 214u);
    EXPECT_EQ(tensor.feature_names(), (std::vector<std::string>{"a", "b", "c"}));
    for (int probe = 0; probe < 500; ++probe) {
        const std::size_t n = rng.below(6), f = rng.below(3), t = rng.below(214);
        EXPECT_EQ(tensor.at(n, f, t), samples[n].features(f, t));
    }
    for (std::size_t n = 0; n < 6; ++n) EXPECT_EQ(targets[n], samples[n].target_adjusted);

    samples.push_back(cornyield::testing::random_sample(rng, 4, 214));
    EXPECT_ERROR_KIND(to_tensor(samples), ErrorKind::Shape);
    EXPECT_ERROR_KIND(to_tensor(std::vector<Sample>{}), ErrorKind::Shape);
}
