#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cornyield/core.hpp"

namespace cornyield::augment {

enum class Mode { None, PairsOnly, PairsAndTriples };

std::string_view to_string(Mode mode);
// "none", "pairs" or "pairs3".
Mode parse_mode(std::string_view text);

struct AugmentPlan {
    Mode mode = Mode::None;
    // crd_id -> sorted county ids
    std::map<std::string, std::vector<std::string>> crd_map;
};

// Builds a plan from county_id,crd_id pairs. A county listed under two
// different CRDs is a plan error; repeating the same pair is tolerated.
AugmentPlan make_plan(Mode mode, std::span<const std::pair<std::string, std::string>> county_to_crd);

// All 2-subsets (and 3-subsets for PairsAndTriples) of each CRD's counties,
// ordered by CRD then lexicographically by member ids.
std::vector<std::vector<std::string>> enumerate_combos(const AugmentPlan& plan);

// Closed-form number of combinations per year.
std::uint64_t combos_per_year(const AugmentPlan& plan);

std::string combination_key(std::span<const std::string> members);

// Element-wise mean of 2 or 3 same-year, same-shape samples.
Sample average_samples(std::span<const Sample* const> samples);
Sample average_samples(std::span<const Sample> samples);

struct AugmentOptions {
    // Missing member county-years: error when strict, otherwise the
    // combination is skipped and counted in the log.
    bool strict = false;
};

// Originals followed, year by year, by the combination samples of that year.
std::vector<Sample> augment_dataset(std::span<const Sample> samples, const AugmentPlan& plan,
                                    const AugmentOptions& opts = {});

}  // namespace cornyield::augment
