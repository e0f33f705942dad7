#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbr/metrics.hpp"
#include "sbr/prior.hpp"
#include "sbr/simgen.hpp"

namespace sbr {

using json = nlohmann::json;

inline const std::vector<std::string> kExperimentIds{"stopping-categorical", "stopping-gmm", "prior-sweep",
                                                     "rb-sweep",             "benchmark-gmm", "adult"};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    int trials = 50;

    double nu0 = 0.001;
    LearnerConfig learner;
    std::map<std::string, double> epsilon_by_group;  // keys "u,s"
    HistogramOptions hist;
    // Empty kind means: uniform over the model's range (simulations) or the
    // padded training range (Adult).
    std::optional<json> prior;
    std::optional<json> model;  // mixture override for rb-sweep / benchmark-gmm
    std::optional<json> gmm;    // single-law override for stopping-gmm / prior-sweep

    std::vector<int> q_grid{5, 10, 50, 500, 5000};
    std::vector<double> nu0_grid{0.001, 0.01, 0.1, 1.0};
    std::vector<double> prior_means{-4.0, -1.0, 2.0, 5.0};
    double prior_sd = 1.0;
    std::vector<double> pr_u0_grid{0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    double holdout_fraction = 0.3;
    std::vector<std::string> adult_paths{"data/adult/adult.data", "data/adult/adult.test"};
    std::vector<std::string> features{"age", "capital_gain", "capital_loss"};
    double adult_padding = 0.05;
    std::int64_t draw_cap = 10'000'000;
    bool snap_vertices = true;
    int series_trials = 1;

    unsigned threads = 0;  // 0 = hardware concurrency; not part of the hash

    // Throws ConfigError on unknown keys, a missing seed or out-of-range knobs.
    static ExperimentConfig from_json(const json& j);
    // Same keys, but `experiment` and `seed` may be absent; used by the
    // fit/repair/evaluate commands, which only need the knobs.
    static ExperimentConfig knobs_from_json(const json& j);
    void validate(bool require_experiment = true) const;
    // Canonical effective config (without `threads`).
    json to_json() const;
    std::string hash() const;  // FNV-1a 64 of to_json().dump(), hex

    LearnerConfig learner_for(SubgroupKey key) const;
};

struct ExperimentResult {
    json config;
    std::string config_hash;
    std::vector<json> records;  // one per trial (or per grid point x trial)
    json summary;
    std::map<std::string, std::string> series;  // file name -> CSV text
    std::vector<double> wall_seconds;           // per record
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes config.json, records.jsonl, summary.json and the series CSVs into
// `dir`; all are functions of the config alone. Wall-clock times go to
// timings.csv only when asked for.
void write_outputs(const ExperimentResult& r, const std::string& dir, bool timings = false);

std::string fnv1a_hex(const std::string& s);

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
    double median = 0.0;
};
Moments moments(std::vector<double> v);

}  // namespace sbr
