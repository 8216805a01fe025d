#include <numeric>

#include "cornyield/core.hpp"
#include "support.hpp"

using namespace cornyield;
using namespace std::chrono;
using cornyield::testing::random_sample;

TEST(Season, MonthStartsAreCumulativeMonthLengths) {
    std::size_t acc = 0;
    for (std::size_t m = 0; m < season::kMonthLength.size(); ++m) {
        EXPECT_EQ(season::kMonthStart[m], acc);
        acc += season::kMonthLength[m];
    }
    EXPECT_EQ(acc, season::kDays);
    EXPECT_EQ(season::kMonthStart, (std::array<std::size_t, 7>{0, 30, 61, 91, 122, 153, 183}));
}

TEST(Season, DayIndexOfLandmarkDates) {
    EXPECT_EQ(season::day_index(year{2013} / April / 1), 0u);
    EXPECT_EQ(season::day_index(year{2013} / July / 1), 91u);
    EXPECT_EQ(season::day_index(year{2013} / July / 31), 121u);
    EXPECT_EQ(season::day_index(year{2013} / August / 1), 122u);
    EXPECT_EQ(season::day_index(year{2013} / September / 1), 153u);
    EXPECT_EQ(season::day_index(year{2013} / October / 1), 183u);
    EXPECT_EQ(season::day_index(year{2013} / October / 31), 213u);
    EXPECT_FALSE(season::day_index(year{2013} / March / 31));
    EXPECT_FALSE(season::day_index(year{2013} / November / 1));
}

TEST(Season, DateOfInvertsDayIndexInLeapAndCommonYears) {
    for (int y : {2015, 2016}) {
        for (std::size_t t = 0; t < season::kDays; ++t) {
            EXPECT_EQ(season::day_index(season::date_of(y, t)), t);
        }
    }
}

TEST(Season, TruncationLengthsEndOnMonthBoundaries) {
    // 122 days run through July 31, 153 through August 31, 183 through September 30.
    EXPECT_EQ(season::date_of(2013, 121), year{2013} / July / 31);
    EXPECT_EQ(season::date_of(2013, 152), year{2013} / August / 31);
    EXPECT_EQ(season::date_of(2013, 182), year{2013} / September / 30);
    for (auto t : season::kTruncations) EXPECT_TRUE(season::is_valid_truncation(t));
    EXPECT_FALSE(season::is_valid_truncation(100));
    EXPECT_FALSE(season::is_valid_truncation(0));
}

TEST(Season, ParseDateIsStrict) {
    EXPECT_EQ(season::parse_date("2013-04-01"), year{2013} / April / 1);
    EXPECT_FALSE(season::parse_date("2013-4-1"));
    EXPECT_FALSE(season::parse_date("2013-02-30"));
    EXPECT_FALSE(season::parse_date("2013/04/01"));
    EXPECT_FALSE(season::parse_date("abcd-ef-gh"));
    EXPECT_EQ(season::format_date(year{2013} / April / 1), "2013-04-01");
}

TEST(DailyWeather, InvariantChecks) {
    DailyWeather w{year{2013} / April / 1, 80, 60, 70, 0.5, 0.2, 5};
    EXPECT_EQ(check_invariants(w), "");
    auto bad = w;
    bad.tmin_f = 81;
    EXPECT_NE(check_invariants(bad), "");
    bad = w;
    bad.rain_max_in = 0.6;
    EXPECT_NE(check_invariants(bad), "");
    bad = w;
    bad.wind_mph = -1;
    EXPECT_NE(check_invariants(bad), "");
    bad = w;
    bad.tmean_f = 59;
    EXPECT_NE(check_invariants(bad), "");
}

TEST(CountyMeta, InvariantChecks) {
    CountyMeta c;
    c.county_id = "19001";
    c.crd_id = "IA-10";
    c.soil[SoilAttr::Rootznaws] = 280;
    c.soil[SoilAttr::Droughty] = 0;
    c.soil[SoilAttr::ShareCropland] = 0.5;
    EXPECT_EQ(check_invariants(c), "");
    c.soil[SoilAttr::Droughty] = 1.5;
    EXPECT_NE(check_invariants(c), "");
    c.soil[SoilAttr::Droughty] = 1;
    c.soil[SoilAttr::ShareCropland] = -0.1;
    EXPECT_NE(check_invariants(c), "");
    c.soil[SoilAttr::ShareCropland] = 0.1;
    c.soil[SoilAttr::Rootznaws] = -1;
    EXPECT_NE(check_invariants(c), "");
}

TEST(FeatureTensor, ZeroFilledShapes) {
    FeatureTensor a(10, 214, 1);
    EXPECT_EQ(a.data().size(), 2140u);
    EXPECT_TRUE(std::all_of(a.data().begin(), a.data().end(), [](double v) { return v == 0.0; }));
    EXPECT_EQ(a.feature_names().size(), 10u);

    FeatureTensor b(1, 1, 1);
    EXPECT_EQ(b.data().size(), 1u);
    EXPECT_EQ(b.at(0, 0, 0), 0.0);
}

TEST(FeatureTensor, FullAugmentedDatasetShape) {
    FeatureTensor t(10, 214, 70026);
    EXPECT_EQ(t.data().size(), std::size_t{10} * 214 * 70026);
    EXPECT_EQ(t.at(70025, 9, 213), 0.0);
}

TEST(FeatureTensor, ZeroDimensionIsShapeError) {
    EXPECT_ERROR_KIND(FeatureTensor(0, 214, 1), ErrorKind::Shape);
    EXPECT_ERROR_KIND(FeatureTensor(10, 0, 1), ErrorKind::Shape);
    EXPECT_ERROR_KIND(FeatureTensor(10, 214, 0), ErrorKind::Shape);
}

TEST(FeatureTensor, WriteThenReadRoundTripOnRandomShapes) {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t f = 1 + rng.below(6), t = 1 + rng.below(40), n = 1 + rng.below(8);
        FeatureTensor x(f, t, n);
        std::vector<double> expect(f * t * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < f; ++j)
                for (std::size_t k = 0; k < t; ++k) {
                    const double v = rng.normal();
                    x.at(i, j, k) = v;
                    expect[(i * f + j) * t + k] = v;
                }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < f; ++j)
                for (std::size_t k = 0; k < t; ++k) EXPECT_EQ(x.at(i, j, k), expect[(i * f + j) * t + k]);
    }
}

TEST(FeatureTensor, TruncationProperties) {
    Rng rng(3);
    FeatureTensor x(3, 214, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 214; ++k) x.at(i, j, k) = rng.normal();
    x.feature_names() = {"a", "b", "c"};

    EXPECT_EQ(x.truncate_time(214), x);

    const auto july = x.truncate_time(122);
    EXPECT_EQ(july.time_len(), 122u);
    EXPECT_EQ(july.features(), 3u);
    EXPECT_EQ(july.samples(), 4u);
    EXPECT_EQ(july.feature_names(), x.feature_names());
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 122; ++k) EXPECT_EQ(july.at(i, j, k), x.at(i, j, k));

    for (std::size_t a : season::kTruncations) {
        for (std::size_t b : season::kTruncations) {
            if (b > a) continue;
            EXPECT_EQ(x.truncate_time(a).truncate_time(b), x.truncate_time(b));
        }
    }
    EXPECT_ERROR_KIND(x.truncate_time(215), ErrorKind::Shape);
    EXPECT_ERROR_KIND(x.truncate_time(0), ErrorKind::Shape);
}

TEST(Sample, TruncateKeepsLeadingDays) {
    Rng rng(5);
    const auto s = random_sample(rng, 4, 214);
    const auto t = truncate_time(s, 153);
    EXPECT_EQ(t.time_len(), 153u);
    EXPECT_EQ(t.target_adjusted, s.target_adjusted);
    for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t d = 0; d < 153; ++d) EXPECT_EQ(t.features(f, d), s.features(f, d));
    EXPECT_EQ(truncate_time(s, 214), s);
    EXPECT_ERROR_KIND(truncate_time(s, 300), ErrorKind::Shape);
}

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        (void)c;
    }
    EXPECT_NE(Rng(42).next_u64(), Rng(43).next_u64());
    EXPECT_NE(Rng::derive(1, 0), Rng::derive(1, 1));
    Rng u(9);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
        EXPECT_LT(u.below(7), 7u);
    }
}

TEST(ErrorType, MessageCarriesModuleAndKind) {
    const Error e(ErrorKind::Gap, "ingest", "missing 2013-05-02");
    EXPECT_EQ(std::string(e.what()), "ingest: gap error: missing 2013-05-02");
    EXPECT_EQ(e.module(), "ingest");
    EXPECT_EQ(e.kind(), ErrorKind::Gap);
}
