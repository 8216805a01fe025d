#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cornyield/core.hpp"

namespace cornyield::select {

enum class Summary { Mean, Sum, Max };

Summary parse_summary(std::string_view text);

// One scalar per (sample, feature): a season summary of each feature row.
struct FeatureSummary {
    std::vector<std::string> names;
    Matrix values;  // N x F
    std::vector<double> target;
};

FeatureSummary summarize(std::span<const Sample> samples, const std::vector<std::string>& names,
                         Summary how = Summary::Mean);

inline constexpr std::size_t kDefaultBins = 10;

// Equal-frequency bin index of every entry. Tied values share the bin of
// their lowest rank, so a constant vector occupies a single bin.
std::vector<std::size_t> equal_frequency_bins(std::span<const double> x, std::size_t bins);

// Histogram estimate of I(x; y) in nats over equal-frequency bins.
// Requires bins >= 2 and x.size() >= bins^2.
double mutual_information(std::span<const double> x, std::span<const double> y,
                          std::size_t bins = kDefaultBins);

struct RankedFeature {
    std::string name;
    double score;  // relevance for the first pick, mRMR criterion afterwards
};

// Greedy max-relevance min-redundancy ordering of the first k features.
// Ties go to the lexicographically smaller name. When the sample count is
// below bins^2 the bin count drops to floor(sqrt(N)).
std::vector<RankedFeature> mrmr_rank(const FeatureSummary& summary, std::size_t k,
                                     std::size_t bins = kDefaultBins);

double pearson(std::span<const double> x, std::span<const double> y);

// Visits features by decreasing relevance I(f; target) (ties by name) and
// keeps one unless its |Pearson r| with an already kept feature exceeds the
// threshold. Every dropped feature therefore has a kept, more relevant
// partner. The result lists the kept names in input order.
std::vector<std::string> correlation_prune(const FeatureSummary& summary, double threshold = 0.9,
                                           std::size_t bins = kDefaultBins);

}  // namespace cornyield::select
