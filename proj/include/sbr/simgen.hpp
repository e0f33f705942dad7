#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbr/datamodel.hpp"
#include "sbr/learner.hpp"
#include "sbr/rng.hpp"

namespace sbr {

struct GmmSpec {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sds;

    static GmmSpec gaussian(double mean, double sd) { return {{1.0}, {mean}, {sd}}; }

    // Throws ConfigError on mismatched lengths, weights off the simplex
    // (1e-12) or sd <= 0.
    void validate() const;
    double sample(Rng& rng) const;
    double mean() const;
    double variance() const;
    // [min(m - 5 sd), max(m + 5 sd)] over the components.
    std::pair<double, double> range() const;

    bool operator==(const GmmSpec&) const = default;
};

// q states on the grid -5 + 10 i / q, i = 0..q. State i carries the N(0,1)
// mass between grid points i and i+1 (renormalised over [-5, 5]); the last
// grid point has zero mass.
class CategoricalSpec {
public:
    explicit CategoricalSpec(int q);

    int q() const noexcept { return q_; }
    const std::vector<double>& support() const noexcept { return support_; }
    const std::vector<double>& probabilities() const noexcept { return prob_; }
    double sample(Rng& rng) const;

private:
    int q_;
    std::vector<double> support_;
    std::vector<double> prob_;
    std::vector<double> cum_;
};

struct MixtureModelSpec {
    PerSubgroup<GmmSpec> laws;
    AttributeWeights weights;

    void validate() const;
    std::pair<double, double> range() const;
    SubgroupKey sample_key(Rng& rng) const;
};

// Gaussian conditionals of the representation-bias study, Pr[s|u] = 0.5.
MixtureModelSpec rb_model(double pr_u0);
// Two-component GMM conditionals of the intersectionality benchmark.
MixtureModelSpec intersectional_model();
// 0.8 N(-1, 1) + 0.2 N(-5, 0.5^2)
GmmSpec minority_gmm();

std::vector<LabelledDatum> sample_labelled(const MixtureModelSpec& spec, std::size_t n, Rng& rng);

// Feeds draws from `next` into `learner` until it quenches. Returns the
// observations absorbed. Throws NonConvergenceError after `cap` draws.
std::vector<double> stream_until_quenched(SubgroupLearner& learner, const std::function<double()>& next,
                                          std::int64_t cap = 10'000'000);

struct QuenchRun {
    ResearchDataset data;
    PerSubgroup<std::int64_t> stopping{};
    PerSubgroup<std::int64_t> discarded{};  // draws that arrived after their learner quenched
    std::int64_t draws = 0;
};

// Draws labelled data from `spec` and routes each datum to its subgroup's
// learner until all four have quenched. Throws NonConvergenceError (with the
// smoothed statistics) after `cap` draws.
QuenchRun sample_until_quenched(const MixtureModelSpec& spec, PerSubgroup<SubgroupLearner>& learners, Rng& rng,
                                std::int64_t cap = 10'000'000);

// Counts round(p_{u,s} * total) per subgroup, with `total` = sum of stopping
// numbers. A zero count calls `warn` and leaves the subgroup empty.
PerSubgroup<std::int64_t> biased_counts(const AttributeWeights& w, std::int64_t total);
ResearchDataset biased_sample(const MixtureModelSpec& spec, const PerSubgroup<std::int64_t>& stopping_numbers,
                              Rng& rng, const std::function<void(const std::string&)>& warn = {});

}  // namespace sbr
