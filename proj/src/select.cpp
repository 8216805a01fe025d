#include "cornyield/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cornyield/error.hpp"

namespace cornyield::select {

namespace {

constexpr std::string_view kModule = "select";
constexpr std::size_t kMinSamples = 30;

std::vector<double> column(const Matrix& m, std::size_t c) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, c);
    return out;
}

std::size_t effective_bins(std::size_t n, std::size_t bins) {
    if (n >= bins * bins) return bins;
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
}

void check_summary(const FeatureSummary& s) {
    if (s.values.rows() < kMinSamples) {
        throw Error(ErrorKind::Domain, kModule,
                    "feature selection needs at least 30 samples, got " + std::to_string(s.values.rows()));
    }
    if (s.names.size() != s.values.cols() || s.target.size() != s.values.rows()) {
        throw Error(ErrorKind::Shape, kModule, "feature summary dimensions disagree");
    }
    for (double v : s.values.data()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Numeric, kModule, "non-finite feature summary");
    }
}

std::vector<double> relevance(const FeatureSummary& s, std::size_t bins) {
    std::vector<double> out(s.values.cols());
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = mutual_information(column(s.values, f), s.target, bins);
    return out;
}

}  // namespace

Summary parse_summary(std::string_view text) {
    if (text == "mean") return Summary::Mean;
    if (text == "sum") return Summary::Sum;
    if (text == "max") return Summary::Max;
    throw Error(ErrorKind::Config, kModule, "unknown summary \"" + std::string(text) + "\"");
}

FeatureSummary summarize(std::span<const Sample> samples, const std::vector<std::string>& names, Summary how) {
    if (samples.empty()) throw Error(ErrorKind::Shape, kModule, "no samples to summarize");
    const std::size_t f_count = samples.front().feature_count();
    if (names.size() != f_count) throw Error(ErrorKind::Shape, kModule, "feature name count mismatch");
    FeatureSummary out;
    out.names = names;
    out.values = Matrix(samples.size(), f_count);
    out.target.reserve(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const Sample& s = samples[n];
        if (s.feature_count() != f_count) throw Error(ErrorKind::Shape, kModule, "heterogeneous sample shapes");
        for (std::size_t f = 0; f < f_count; ++f) {
            auto row = s.features.row(f);
            double v = 0.0;
            switch (how) {
                case Summary::Mean:
                    v = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
                    break;
                case Summary::Sum: v = std::accumulate(row.begin(), row.end(), 0.0); break;
                case Summary::Max: v = *std::max_element(row.begin(), row.end()); break;
            }
            out.values(n, f) = v;
        }
        out.target.push_back(s.target_adjusted);
    }
    return out;
}

std::vector<std::size_t> equal_frequency_bins(std::span<const double> x, std::size_t bins) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<std::size_t> out(n);
    std::size_t tie_rank = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r == 0 || x[order[r]] != x[order[r - 1]]) tie_rank = r;
        out[order[r]] = tie_rank * bins / n;
    }
    return out;
}

double mutual_information(std::span<const double> x, std::span<const double> y, std::size_t bins) {
    if (x.size() != y.size()) throw Error(ErrorKind::Shape, kModule, "mutual information of unequal lengths");
    if (bins < 2) throw Error(ErrorKind::Domain, kModule, "need at least 2 bins");
    const std::size_t n = x.size();
    if (n < bins * bins) {
        throw Error(ErrorKind::Domain, kModule,
                    std::to_string(n) + " samples is too few for " + std::to_string(bins) + " bins");
    }
    const auto bx = equal_frequency_bins(x, bins);
    const auto by = equal_frequency_bins(y, bins);
    std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[bx[i] * bins + by[i]] += 1.0;
        px[bx[i]] += 1.0;
        py[by[i]] += 1.0;
    }
    const double total = static_cast<double>(n);
    // Cell terms are symmetric in (x, y); accumulating them in a canonical
    // order (by unordered bin pair) makes I(x;y) and I(y;x) bit-identical.
    double mi = 0.0;
    for (std::size_t a = 0; a < bins; ++a) {
        for (std::size_t b = a; b < bins; ++b) {
            auto term = [&](std::size_t i, std::size_t j) {
                const double c = joint[i * bins + j];
                if (c == 0.0) return 0.0;
                return (c / total) * std::log(c * total / (px[i] * py[j]));
            };
            const double t1 = term(a, b);
            const double t2 = a == b ? 0.0 : term(b, a);
            mi += t1 < t2 ? t1 + t2 : t2 + t1;
        }
    }
    return std::max(0.0, mi);
}

std::vector<RankedFeature> mrmr_rank(const FeatureSummary& summary, std::size_t k, std::size_t bins) {
    if (k == 0) return {};
    check_summary(summary);
    const std::size_t f_count = summary.values.cols();
    if (k > f_count) {
        throw Error(ErrorKind::Domain, kModule,
                    "cannot rank " + std::to_string(k) + " of " + std::to_string(f_count) + " features");
    }
    bins = effective_bins(summary.values.rows(), bins);
    const auto rel = relevance(summary, bins);

    std::vector<std::vector<double>> cols(f_count);
    for (std::size_t f = 0; f < f_count; ++f) cols[f] = column(summary.values, f);

    std::vector<bool> chosen(f_count, false);
    std::vector<double> redundancy_sum(f_count, 0.0);
    std::vector<RankedFeature> out;
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = f_count;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < f_count; ++f) {
            if (chosen[f]) continue;
            const double score =
                step == 0 ? rel[f] : rel[f] - redundancy_sum[f] / static_cast<double>(step);
            if (best == f_count || score > best_score ||
                (score == best_score && summary.names[f] < summary.names[best])) {
                best = f;
                best_score = score;
            }
        }
        chosen[best] = true;
        out.push_back({summary.names[best], best_score});
        for (std::size_t f = 0; f < f_count; ++f) {
            if (!chosen[f]) redundancy_sum[f] += mutual_information(cols[f], cols[best], bins);
        }
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw Error(ErrorKind::Shape, kModule, "pearson of unequal lengths");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> correlation_prune(const FeatureSummary& summary, double threshold, std::size_t bins) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorKind::Domain, kModule, "correlation threshold must lie in (0, 1)");
    }
    check_summary(summary);
    const std::size_t f_count = summary.values.cols();
    bins = effective_bins(summary.values.rows(), bins);
    const auto rel = relevance(summary, bins);
    std::vector<std::vector<double>> cols(f_count);
    for (std::size_t f = 0; f < f_count; ++f) cols[f] = column(summary.values, f);

    std::vector<std::size_t> order(f_count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rel[a] != rel[b]) return rel[a] > rel[b];
        return summary.names[a] < summary.names[b];
    });

    std::vector<bool> kept(f_count, false);
    std::vector<std::size_t> kept_list;
    for (std::size_t f : order) {
        bool ok = true;
        for (std::size_t g : kept_list) {
            if (std::abs(pearson(cols[f], cols[g])) > threshold) {
                ok = false;
                break;
            }
        }
        if (ok) {
            kept[f] = true;
            kept_list.push_back(f);
        }
    }
    std::vector<std::string> out;
    for (std::size_t f = 0; f < f_count; ++f) {
        if (kept[f]) out.push_back(summary.names[f]);
    }
    return out;
}

}  // namespace cornyield::select
