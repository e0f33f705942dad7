#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sbr/dirichlet.hpp"
#include "sbr/prior.hpp"

namespace sbr {

struct LearnerConfig {
    double epsilon = 0.01;
    int window = 10;
    int k_min = 10;
    // Distinct vertices needed before quenching is allowed is this + 1.
    int min_interior_cells = 1;

    void validate() const;
    bool operator==(const LearnerConfig&) const = default;
};

// Full state of a learner; exposed for snapshots.
struct LearnerState {
    PriorSpec prior;
    LearnerConfig config;
    std::vector<double> vertices;
    std::vector<double> alpha;         // one per cell, vertices.size() + 1
    std::vector<std::int64_t> counts;  // observation atoms per cell
    std::vector<double> kld_history;   // raw Dirichlet KLD per step, from k = 2
    std::vector<double> stat_history;  // stopping statistic per step, from k = 2
    double smoothed = std::numeric_limits<double>::infinity();
    std::int64_t k = 0;
    bool quenched = false;
    std::int64_t out_of_support = 0;

    bool operator==(const LearnerState&) const = default;
};

// Sequential Dirichlet-process learner for one subgroup's feature law.
//
// The stopping statistic is the one-step Dirichlet KLD. When the datum
// repeats an existing vertex it is used as is; when the datum adds a vertex
// it is divided by the number of cells, so that a refinement is scored per
// cell rather than as a fresh full-dimensional update.
class SubgroupLearner {
public:
    using WarningHandler = std::function<void(const std::string&)>;

    SubgroupLearner(PriorSpec prior, LearnerConfig config);
    // Throws ConfigError if the state is inconsistent.
    explicit SubgroupLearner(LearnerState state);

    // Throws QuenchedError when already quenched, DataError on non-finite x.
    void absorb(double x);

    bool quenched() const noexcept { return s_.quenched; }
    std::int64_t k() const noexcept { return s_.k; }
    // Throws NotStoppedError unless quenched.
    std::int64_t stopping_number() const;
    double smoothed_kld() const noexcept { return s_.smoothed; }

    const std::vector<double>& vertices() const noexcept { return s_.vertices; }
    const std::vector<std::int64_t>& counts() const noexcept { return s_.counts; }
    const std::vector<double>& kld_history() const noexcept { return s_.kld_history; }
    const std::vector<double>& stat_history() const noexcept { return s_.stat_history; }
    DirichletState dirichlet() const { return {s_.alpha}; }
    double nu() const;  // sum of alpha
    const PriorSpec& prior() const noexcept { return s_.prior; }
    const LearnerConfig& config() const noexcept { return s_.config; }
    const LearnerState& state() const noexcept { return s_; }
    std::int64_t out_of_support() const noexcept { return s_.out_of_support; }

    // Posterior mean CDF (nu0 F0(x) + #{obs <= x}) / (nu0 + k).
    double posterior_mean_cdf(double x) const;

    void on_warning(WarningHandler h) { warn_ = std::move(h); }

private:
    LearnerState s_;
    double total_ = 0.0;  // running sum of alpha
    WarningHandler warn_;
};

}  // namespace sbr
