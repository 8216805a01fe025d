#include "cornyield/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "cornyield/csv.hpp"
#include "cornyield/error.hpp"
#include "cornyield/log.hpp"

namespace cornyield::eval {

namespace {

constexpr std::string_view kModule = "eval";

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

std::string key_text(const std::string& county, int year) { return county + " " + std::to_string(year); }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
        out << content;
        if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
}

}  // namespace

CountyErrors county_errors(std::span<const Prediction> preds, std::span<const YieldRecord> actuals) {
    std::map<std::pair<std::string, int>, double> truth;
    for (const auto& a : actuals) {
        if (a.county_id.find('+') != std::string::npos) continue;
        if (!truth.emplace(std::pair{a.county_id, a.year}, a.yield_bu_ac).second) {
            fail(ErrorKind::Join, "duplicate actual for " + key_text(a.county_id, a.year));
        }
    }
    std::vector<CountyRow> rows;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& p : preds) {
        if (p.county_id.find('+') != std::string::npos) continue;
        const std::pair key{p.county_id, p.year};
        if (!seen.insert(key).second) fail(ErrorKind::Join, "duplicate prediction for " + key_text(p.county_id, p.year));
        const auto it = truth.find(key);
        if (it == truth.end()) fail(ErrorKind::Join, "no actual yield for " + key_text(p.county_id, p.year));
        rows.push_back({p.county_id, p.year, p.value, it->second, std::abs(p.value - it->second)});
    }
    if (seen.size() != truth.size()) {
        for (const auto& [key, v] : truth) {
            if (!seen.contains(key)) fail(ErrorKind::Join, "no prediction for " + key_text(key.first, key.second));
        }
    }
    return summarize_rows(std::move(rows));
}

CountyErrors summarize_rows(std::vector<CountyRow> rows) {
    std::sort(rows.begin(), rows.end(),
              [](const CountyRow& a, const CountyRow& b) { return std::tie(a.key, a.year) < std::tie(b.key, b.year); });
    CountyErrors out;
    std::map<int, std::pair<double, std::size_t>> by_year;
    double sq = 0.0, abs_sum = 0.0;
    for (const auto& r : rows) {
        if (!std::isfinite(r.predicted)) fail(ErrorKind::Numeric, "non-finite prediction for " + key_text(r.key, r.year));
        const double e2 = r.abs_error * r.abs_error;
        sq += e2;
        abs_sum += r.abs_error;
        auto& [s, n] = by_year[r.year];
        s += e2;
        ++n;
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        out.mse = sq / n;
        out.mean_abs_error = abs_sum / n;
        // Jensen: the mean square can never fall below the squared mean.
        const double floor = out.mean_abs_error * out.mean_abs_error;
        if (out.mse < floor - 1e-9 * std::max(1.0, floor)) fail(ErrorKind::Numeric, "MSE below squared mean error");
    }
    for (const auto& [year, acc] : by_year) out.mse_by_year[year] = acc.first / static_cast<double>(acc.second);
    out.rows = std::move(rows);
    return out;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) fail(ErrorKind::Shape, "weighted mean needs aligned, non-empty input");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(weights[i] >= 0.0)) fail(ErrorKind::Domain, "negative weight");
        num += weights[i] * values[i];
        den += weights[i];
    }
    if (!(den > 0.0)) fail(ErrorKind::Domain, "weights sum to zero");
    return num / den;
}

std::string_view to_string(Weighting w) { return w == Weighting::HarvestedAcres ? "harvested_acres" : "unweighted"; }

StateAggregate state_aggregate(std::span<const CountyRow> rows, const std::map<std::string, double>& harvested_acres) {
    std::map<int, std::vector<const CountyRow*>> by_year;
    for (const auto& r : rows) by_year[r.year].push_back(&r);

    std::size_t covered = 0;
    for (const auto& r : rows) covered += harvested_acres.contains(r.key) ? 1 : 0;
    bool weighted = !rows.empty() && covered == rows.size();
    if (weighted) {
        for (const auto& [year, list] : by_year) {
            double total = 0.0;
            for (const auto* r : list) total += harvested_acres.at(r->key);
            if (!(total > 0.0)) {
                log::warn("harvested acres sum to zero in " + std::to_string(year) + "; using unweighted means");
                weighted = false;
            }
        }
    } else if (covered > 0) {
        log::warn("harvested acres known for " + std::to_string(covered) + " of " + std::to_string(rows.size()) +
                  " county rows; using unweighted means");
    }

    StateAggregate out;
    out.weighting = weighted ? Weighting::HarvestedAcres : Weighting::Unweighted;
    for (const auto& [year, list] : by_year) {
        std::vector<double> pred, actual, w;
        for (const auto* r : list) {
            pred.push_back(r->predicted);
            actual.push_back(r->actual);
            w.push_back(weighted ? harvested_acres.at(r->key) : 1.0);
        }
        out.rows.push_back({year, weighted_mean(pred, w), weighted_mean(actual, w)});
    }
    return out;
}

UsdaTable parse_usda_csv(const std::filesystem::path& path) {
    const auto table = csv::Table::read(path, kModule);
    const auto c_year = table.require_column("year");
    const auto c_actual = table.require_column("actual");
    const auto c_usda = table.require_column("usda_nov");
    UsdaTable out;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const int year = static_cast<int>(table.integer(r, c_year));
        if (!out.emplace(year, UsdaEntry{table.number(r, c_actual), table.number(r, c_usda)}).second) {
            table.fail(r, c_year, "duplicate year");
        }
    }
    return out;
}

std::vector<UsdaComparison> usda_compare(std::span<const StateRow> state, const UsdaTable& reference) {
    std::vector<UsdaComparison> out;
    for (const auto& s : state) {
        UsdaComparison c;
        c.year = s.year;
        c.model = s.predicted;
        const auto it = reference.find(s.year);
        if (it != reference.end()) {
            c.compared = true;
            c.actual = it->second.actual;
            c.usda = it->second.usda;
            c.usda_error = c.usda - c.actual;
            c.model_error = c.model - c.actual;
        } else {
            c.actual = s.actual;
            c.model_error = c.model - c.actual;
        }
        out.push_back(c);
    }
    return out;
}

std::pair<std::filesystem::path, std::filesystem::path> emit_plot_csv(const EvalReport& report,
                                                                      const std::filesystem::path& stem) {
    const std::filesystem::path county_path = stem.string() + "_county.csv";
    const std::filesystem::path state_path = stem.string() + "_state.csv";

    std::string county = "key,year,pred,actual,abs_err\n";
    for (const auto& r : report.county.rows) {
        county += r.key + ',' + std::to_string(r.year) + ',' + csv::format_fixed(r.predicted, 4) + ',' +
                  csv::format_fixed(r.actual, 4) + ',' + csv::format_fixed(r.abs_error, 4) + '\n';
    }

    std::map<int, double> usda;
    for (const auto& c : report.usda) {
        if (c.compared) usda[c.year] = c.usda;
    }
    std::string state = "year,pred,actual,usda\n";
    for (const auto& s : report.state.rows) {
        const auto u = usda.find(s.year);
        state += std::to_string(s.year) + ',' + csv::format_fixed(s.predicted, 4) + ',' +
                 csv::format_fixed(s.actual, 4) + ',' + (u == usda.end() ? "" : csv::format_fixed(u->second, 4)) +
                 '\n';
    }
    write_atomic(county_path, county);
    write_atomic(state_path, state);
    return {county_path, state_path};
}

std::vector<CountyRow> read_county_csv(const std::filesystem::path& path) {
    const auto table = csv::Table::read(path, kModule);
    const auto c_key = table.require_column("key");
    const auto c_year = table.require_column("year");
    const auto c_pred = table.require_column("pred");
    const auto c_actual = table.require_column("actual");
    const auto c_err = table.require_column("abs_err");
    std::vector<CountyRow> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        rows.push_back({table.text(r, c_key), static_cast<int>(table.integer(r, c_year)), table.number(r, c_pred),
                        table.number(r, c_actual), table.number(r, c_err)});
    }
    return rows;
}

}  // namespace cornyield::eval
