#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbr/datamodel.hpp"
#include "sbr/rng.hpp"

namespace sbr {

enum class AdultFeature { age, capital_gain, capital_loss };

AdultFeature parse_adult_feature(const std::string& name);  // throws ConfigError
std::string to_string(AdultFeature f);

struct AdultLoad {
    std::vector<LabelledDatum> records;
    std::int64_t rows_read = 0;
    std::int64_t dropped_missing = 0;  // "?" in a used column
    std::int64_t rejected = 0;         // unknown sex or education token
};

// Reads comma-separated Adult files (train and test concatenated in the
// order given). Blank lines, a header row and "|"-prefixed lines are
// skipped. s = 1 for Male; u = 0 iff education_num <= 9.
// Throws ParseError (with the line number) on a row without 15 columns or a
// malformed numeric field.
AdultLoad load_adult(const std::vector<std::filesystem::path>& paths, AdultFeature feature,
                     const std::function<void(const std::string&)>& log = {});

// Stratified by (u,s): each stratum contributes round(fraction * n) records
// to the holdout, chosen uniformly at random; both parts keep input order.
// Throws SplitError when a stratum would be empty on either side.
std::pair<std::vector<LabelledDatum>, std::vector<LabelledDatum>> split_holdout(
    const std::vector<LabelledDatum>& data, double fraction, Rng& rng);

// Fisher-Yates with Rng::below.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace sbr
