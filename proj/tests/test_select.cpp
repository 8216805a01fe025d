#include <cmath>

#include "cornyield/select.hpp"
#include "support.hpp"

using namespace cornyield;
using namespace cornyield::select;

namespace {

FeatureSummary make_summary(std::vector<std::string> names, const std::vector<std::vector<double>>& cols,
                            std::vector<double> target) {
    FeatureSummary s;
    s.names = std::move(names);
    s.values = Matrix(target.size(), cols.size());
    for (std::size_t f = 0; f < cols.size(); ++f)
        for (std::size_t n = 0; n < target.size(); ++n) s.values(n, f) = cols[f][n];
    s.target = std::move(target);
    return s;
}

std::vector<double> normals(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST(MutualInformation, IndependentIsNearZero) {
    Rng rng(1);
    const auto x = normals(rng, 10000), y = normals(rng, 10000);
    EXPECT_LT(mutual_information(x, y), 0.05);
}

TEST(MutualInformation, IdentityIsLogBins) {
    Rng rng(2);
    const auto x = normals(rng, 1000);
    EXPECT_NEAR(mutual_information(x, x), std::log(10.0), 1e-12);
    EXPECT_NEAR(mutual_information(x, x, 4), std::log(4.0), 1e-12);
}

TEST(MutualInformation, ConstantCarriesNothing) {
    Rng rng(3);
    const auto x = normals(rng, 500);
    const std::vector<double> c(500, 7.0);
    EXPECT_EQ(mutual_information(c, x), 0.0);
}

TEST(MutualInformation, SymmetricAndMonotoneInvariant) {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = normals(rng, 400);
        std::vector<double> y(400), scaled(400);
        for (std::size_t i = 0; i < 400; ++i) {
            y[i] = x[i] * x[i] + rng.normal();
            scaled[i] = 3.0 * x[i] + 11.0;
        }
        EXPECT_EQ(mutual_information(x, y), mutual_information(y, x));
        EXPECT_EQ(mutual_information(scaled, y), mutual_information(x, y));
        EXPECT_GE(mutual_information(x, y), 0.0);
    }
}

TEST(MutualInformation, PreconditionsEnforced) {
    const std::vector<double> small(50, 1.0);
    EXPECT_ERROR_KIND(mutual_information(small, small), ErrorKind::Domain);
    EXPECT_ERROR_KIND(mutual_information(small, small, 1), ErrorKind::Domain);
    EXPECT_ERROR_KIND(mutual_information(small, std::vector<double>(49, 1.0), 2), ErrorKind::Shape);
}

TEST(Bins, EqualFrequencyWithTies) {
    const std::vector<double> x{5, 1, 4, 2, 3, 0, 9, 8, 7, 6};
    const auto b = equal_frequency_bins(x, 5);
    const std::vector<std::size_t> expect{2, 0, 2, 1, 1, 0, 4, 4, 3, 3};
    EXPECT_EQ(b, expect);
    const auto c = equal_frequency_bins(std::vector<double>(10, 1.0), 5);
    for (auto v : c) EXPECT_EQ(v, 0u);
}

TEST(Mrmr, CopyOfTopFeatureIsDemoted) {
    Rng rng(5);
    const std::size_t n = 2000;
    const auto a = normals(rng, n), b = normals(rng, n), noise = normals(rng, n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * a[i] + 1.0 * b[i] + 0.3 * noise[i];
    const auto s = make_summary({"a", "a_copy", "b", "junk"}, {a, a, b, normals(rng, n)}, y);
    const auto ranked = mrmr_rank(s, 4);
    ASSERT_EQ(ranked.size(), 4u);
    EXPECT_EQ(ranked[0].name, "a");  // ties with its copy go to the smaller name
    EXPECT_EQ(ranked[1].name, "b");
    EXPECT_EQ(ranked[0].score, mutual_information(a, y));
}

TEST(Mrmr, GreedyMatchesExhaustiveOracleOnThreeFeatures) {
    Rng rng(6);
    const std::size_t n = 900;
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<std::vector<double>> cols{normals(rng, n), normals(rng, n), normals(rng, n)};
        for (std::size_t i = 0; i < n; ++i) cols[2][i] = 0.7 * cols[0][i] + 0.3 * cols[2][i];
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = cols[0][i] + 0.5 * cols[1][i] + rng.normal() * 0.5;
        const auto s = make_summary({"f0", "f1", "f2"}, cols, y);

        // Independent recomputation of the greedy criterion.
        std::vector<double> rel(3);
        for (std::size_t f = 0; f < 3; ++f) rel[f] = mutual_information(cols[f], y);
        const std::size_t first = std::max_element(rel.begin(), rel.end()) - rel.begin();
        std::size_t second = 3;
        double best = -1e300;
        for (std::size_t f = 0; f < 3; ++f) {
            if (f == first) continue;
            const double score = rel[f] - mutual_information(cols[f], cols[first]);
            if (score > best) best = score, second = f;
        }
        const auto ranked = mrmr_rank(s, 3);
        EXPECT_EQ(ranked[0].name, s.names[first]);
        EXPECT_EQ(ranked[1].name, s.names[second]);
        EXPECT_NEAR(ranked[1].score, best, 1e-12);
    }
}

TEST(Mrmr, SmallSampleFallsBackToSqrtBins) {
    Rng rng(7);
    const auto x = normals(rng, 50);
    const auto s = make_summary({"x"}, {x}, x);
    const auto ranked = mrmr_rank(s, 1);
    EXPECT_EQ(ranked[0].score, mutual_information(x, x, 7));  // floor(sqrt(50)) bins
    EXPECT_ERROR_KIND(mrmr_rank(make_summary({"x"}, {normals(rng, 20)}, normals(rng, 20)), 1), ErrorKind::Domain);
    EXPECT_ERROR_KIND(mrmr_rank(s, 2), ErrorKind::Domain);
}

TEST(Prune, DropsCorrelatedLessRelevantFeature) {
    Rng rng(8);
    const std::size_t n = 1000;
    const auto a = normals(rng, n), c = normals(rng, n);
    std::vector<double> near_a(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        near_a[i] = a[i] + 0.05 * rng.normal();
        y[i] = a[i] + 0.5 * c[i];
    }
    const auto s = make_summary({"near_a", "c", "a"}, {near_a, c, a}, y);
    const auto kept = correlation_prune(s, 0.9);
    // a is more relevant than its noisy twin, so the twin goes.
    EXPECT_EQ(kept, (std::vector<std::string>{"c", "a"}));
    EXPECT_EQ(correlation_prune(s, 0.999).size(), 3u);
    EXPECT_NEAR(pearson(a, a), 1.0, 1e-12);
    EXPECT_GT(std::abs(pearson(a, near_a)), 0.9);
}

TEST(Prune, EveryDroppedFeatureHasAKeptPartner) {
    Rng rng(9);
    const std::size_t n = 600;
    std::vector<std::vector<double>> cols;
    std::vector<std::string> names;
    const auto base = normals(rng, n);
    for (int f = 0; f < 8; ++f) {
        auto col = normals(rng, n);
        const double w = f % 2 == 0 ? 0.95 : 0.2;
        for (std::size_t i = 0; i < n; ++i) col[i] = w * base[i] + (1 - w) * col[i];
        cols.push_back(col);
        names.push_back("f" + std::to_string(f));
    }
    const auto s = make_summary(names, cols, base);
    const auto kept = correlation_prune(s, 0.9);
    for (std::size_t f = 0; f < names.size(); ++f) {
        if (std::find(kept.begin(), kept.end(), names[f]) != kept.end()) continue;
        bool partner = false;
        for (const auto& k : kept) {
            const std::size_t j = std::find(names.begin(), names.end(), k) - names.begin();
            partner |= std::abs(pearson(cols[f], cols[j])) > 0.9 &&
                       mutual_information(cols[j], base) >= mutual_information(cols[f], base);
        }
        EXPECT_TRUE(partner) << names[f];
    }
}

TEST(Summaries, MeanSumMax) {
    Sample s;
    s.features = Matrix(2, 4);
    const std::vector<double> r0{1, 2, 3, 6}, r1{-1, -5, 0, 2};
    std::copy(r0.begin(), r0.end(), s.features.row(0).begin());
    std::copy(r1.begin(), r1.end(), s.features.row(1).begin());
    s.target_adjusted = 150;
    const std::vector<Sample> v{s};
    EXPECT_EQ(summarize(v, {"a", "b"}, Summary::Mean).values(0, 0), 3.0);
    EXPECT_EQ(summarize(v, {"a", "b"}, Summary::Sum).values(0, 1), -4.0);
    EXPECT_EQ(summarize(v, {"a", "b"}, Summary::Max).values(0, 1), 2.0);
    EXPECT_EQ(summarize(v, {"a", "b"}).target[0], 150.0);
    EXPECT_ERROR_KIND(summarize(v, {"a"}), ErrorKind::Shape);
    EXPECT_ERROR_KIND(parse_summary("median"), ErrorKind::Config);
}
