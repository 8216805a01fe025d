#include "cornyield/augment.hpp"

#include <algorithm>
#include <set>

#include "cornyield/error.hpp"
#include "cornyield/log.hpp"

namespace cornyield::augment {

namespace {

constexpr std::string_view kModule = "augment";

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::None: return "none";
        case Mode::PairsOnly: return "pairs";
        case Mode::PairsAndTriples: return "pairs3";
    }
    return "none";
}

Mode parse_mode(std::string_view text) {
    if (text == "none") return Mode::None;
    if (text == "pairs") return Mode::PairsOnly;
    if (text == "pairs3") return Mode::PairsAndTriples;
    throw Error(ErrorKind::Config, kModule, "unknown augment mode \"" + std::string(text) + "\"");
}

AugmentPlan make_plan(Mode mode, std::span<const std::pair<std::string, std::string>> county_to_crd) {
    AugmentPlan plan;
    plan.mode = mode;
    std::map<std::string, std::string> owner;
    for (const auto& [county, crd] : county_to_crd) {
        auto [it, inserted] = owner.emplace(county, crd);
        if (!inserted) {
            if (it->second != crd) {
                throw Error(ErrorKind::Plan, kModule,
                            "county " + county + " assigned to both " + it->second + " and " + crd);
            }
            continue;
        }
        plan.crd_map[crd].push_back(county);
    }
    for (auto& [crd, counties] : plan.crd_map) std::sort(counties.begin(), counties.end());
    return plan;
}

std::vector<std::vector<std::string>> enumerate_combos(const AugmentPlan& plan) {
    std::vector<std::vector<std::string>> out;
    if (plan.mode == Mode::None) return out;
    std::set<std::string> seen;
    for (const auto& [crd, counties] : plan.crd_map) {
        for (const auto& c : counties) {
            if (!seen.insert(c).second) {
                throw Error(ErrorKind::Plan, kModule, "county " + c + " appears in more than one CRD");
            }
        }
        std::vector<std::string> ids = counties;
        std::sort(ids.begin(), ids.end());
        const std::size_t n = ids.size();
        std::vector<std::vector<std::string>> local;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                local.push_back({ids[a], ids[b]});
                if (plan.mode != Mode::PairsAndTriples) continue;
                for (std::size_t c = b + 1; c < n; ++c) local.push_back({ids[a], ids[b], ids[c]});
            }
        }
        std::sort(local.begin(), local.end());
        out.insert(out.end(), local.begin(), local.end());
    }
    return out;
}

std::uint64_t combos_per_year(const AugmentPlan& plan) {
    std::uint64_t total = 0;
    if (plan.mode == Mode::None) return 0;
    for (const auto& [crd, counties] : plan.crd_map) {
        total += choose(counties.size(), 2);
        if (plan.mode == Mode::PairsAndTriples) total += choose(counties.size(), 3);
    }
    return total;
}

std::string combination_key(std::span<const std::string> members) {
    std::vector<std::string> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    std::string key;
    for (const auto& m : sorted) {
        if (!key.empty()) key += '+';
        key += m;
    }
    return key;
}

Sample average_samples(std::span<const Sample* const> samples) {
    if (samples.size() < 2 || samples.size() > 3) {
        throw Error(ErrorKind::Combination, kModule,
                    "combinations average 2 or 3 samples, got " + std::to_string(samples.size()));
    }
    const Sample& first = *samples.front();
    for (const Sample* s : samples) {
        if (s->year != first.year) {
            throw Error(ErrorKind::Combination, kModule,
                        "cannot combine years " + std::to_string(first.year) + " and " + std::to_string(s->year));
        }
        if (s->feature_count() != first.feature_count() || s->time_len() != first.time_len()) {
            throw Error(ErrorKind::Combination, kModule, "cannot combine samples of different shapes");
        }
    }
    const double k = static_cast<double>(samples.size());
    Sample out;
    out.year = first.year;
    out.features = Matrix(first.feature_count(), first.time_len());
    auto dst = out.features.data();
    double target = 0.0;
    for (const Sample* s : samples) {
        auto src = s->features.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        target += s->target_adjusted;
        out.members.insert(out.members.end(), s->members.begin(), s->members.end());
    }
    for (double& v : dst) v /= k;
    out.target_adjusted = target / k;
    std::sort(out.members.begin(), out.members.end());
    out.key = combination_key(out.members);
    return out;
}

Sample average_samples(std::span<const Sample> samples) {
    std::vector<const Sample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    return average_samples(std::span<const Sample* const>(ptrs));
}

std::vector<Sample> augment_dataset(std::span<const Sample> samples, const AugmentPlan& plan,
                                    const AugmentOptions& opts) {
    std::vector<Sample> out(samples.begin(), samples.end());
    const auto combos = enumerate_combos(plan);
    if (combos.empty()) return out;

    std::map<int, std::map<std::string, const Sample*>> by_year;
    for (const auto& s : samples) {
        if (s.is_combination()) continue;
        by_year[s.year][s.key] = &s;
    }

    std::size_t skipped = 0;
    for (const auto& [year, index] : by_year) {
        for (const auto& combo : combos) {
            std::vector<const Sample*> members;
            members.reserve(combo.size());
            for (const auto& id : combo) {
                auto it = index.find(id);
                if (it == index.end()) break;
                members.push_back(it->second);
            }
            if (members.size() != combo.size()) {
                if (opts.strict) {
                    throw Error(ErrorKind::Coverage, kModule,
                                "combination " + combination_key(combo) + " needs a missing county-year in " +
                                    std::to_string(year));
                }
                ++skipped;
                continue;
            }
            out.push_back(average_samples(std::span<const Sample* const>(members)));
        }
    }
    if (skipped > 0) {
        log::warn("augment: skipped " + std::to_string(skipped) +
                  " combination(s) with a missing member county-year");
    }
    return out;
}

}  // namespace cornyield::augment
