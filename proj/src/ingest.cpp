#include "sbr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "sbr/errors.hpp"

namespace sbr {

AdultFeature parse_adult_feature(const std::string& name) {
    if (name == "age") return AdultFeature::age;
    if (name == "capital_gain" || name == "capital-gain") return AdultFeature::capital_gain;
    if (name == "capital_loss" || name == "capital-loss") return AdultFeature::capital_loss;
    throw ConfigError("unknown Adult feature '" + name + "' (age, capital_gain, capital_loss)");
}

std::string to_string(AdultFeature f) {
    switch (f) {
        case AdultFeature::age: return "age";
        case AdultFeature::capital_gain: return "capital_gain";
        case AdultFeature::capital_loss: return "capital_loss";
    }
    return "?";
}

namespace {

constexpr std::size_t kColumns = 15;
constexpr std::size_t kAge = 0, kEduNum = 4, kSex = 9, kGain = 10, kLoss = 11;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '.'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    return out;
}

bool to_long(std::string_view s, long& v) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

}  // namespace

AdultLoad load_adult(const std::vector<std::filesystem::path>& paths, AdultFeature feature,
                     const std::function<void(const std::string&)>& log) {
    AdultLoad out;
    const std::size_t fcol = feature == AdultFeature::age ? kAge : feature == AdultFeature::capital_gain ? kGain : kLoss;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string_view sv = trim(line);
            if (sv.empty() || sv.front() == '|') continue;
            const auto f = split_commas(sv);
            if (f.size() != kColumns)
                throw ParseError(lineno, path.filename().string() + ": expected 15 columns, found " +
                                             std::to_string(f.size()));
            if (f[kAge] == "age") continue;  // header row
            ++out.rows_read;
            if (f[kAge] == "?" || f[kEduNum] == "?" || f[kSex] == "?" || f[fcol] == "?") {
                ++out.dropped_missing;
                continue;
            }
            long edu = 0, x = 0;
            if (!to_long(f[kEduNum], edu) || edu < 1) {
                ++out.rejected;
                if (log) log(path.filename().string() + ":" + std::to_string(lineno) + ": unknown education level");
                continue;
            }
            int s;
            if (f[kSex] == "Male")
                s = 1;
            else if (f[kSex] == "Female")
                s = 0;
            else {
                ++out.rejected;
                if (log) log(path.filename().string() + ":" + std::to_string(lineno) + ": unknown sex token");
                continue;
            }
            if (!to_long(f[fcol], x) || x < 0)
                throw ParseError(lineno, path.filename().string() + ": bad value for " + to_string(feature));
            out.records.push_back({static_cast<double>(x), edu <= 9 ? 0 : 1, s});
        }
    }
    if (log)
        log("adult: " + std::to_string(out.rows_read) + " rows, " + std::to_string(out.dropped_missing) +
            " dropped for missing values, " + std::to_string(out.rejected) + " rejected");
    return out;
}

std::pair<std::vector<LabelledDatum>, std::vector<LabelledDatum>> split_holdout(
    const std::vector<LabelledDatum>& data, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must lie in (0, 1)");
    PerSubgroup<std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < data.size(); ++i) strata[SubgroupKey{data[i].u, data[i].s}.index()].push_back(i);
    std::vector<char> held(data.size(), 0);
    for (auto key : kSubgroups) {
        auto& idx = strata[key.index()];
        const auto n = static_cast<double>(idx.size());
        const auto h = static_cast<std::size_t>(std::llround(fraction * n));
        if (h == 0 || h == idx.size())
            throw SplitError("holdout fraction leaves stratum " + key.label() + " empty on one side (n=" +
                             std::to_string(idx.size()) + ")");
        shuffle(idx, rng);
        for (std::size_t t = 0; t < h; ++t) held[idx[t]] = 1;
    }
    std::pair<std::vector<LabelledDatum>, std::vector<LabelledDatum>> out;
    for (std::size_t i = 0; i < data.size(); ++i) (held[i] ? out.second : out.first).push_back(data[i]);
    return out;
}

}  // namespace sbr
