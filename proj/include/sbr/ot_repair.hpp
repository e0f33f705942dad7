#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sbr/datamodel.hpp"
#include "sbr/learner.hpp"
#include "sbr/rng.hpp"

namespace sbr {

// Centroids of the interior cells of a quenched partition, with the number
// of observation atoms in each cell as weights. For continuous streams every
// weight is 1 and the law is uniform over the centroids.
struct QuantizedConditional {
    std::vector<double> centroids;      // strictly increasing
    std::vector<std::int64_t> weights;  // > 0, same length
    std::vector<double> vertices;       // source vertices (size m + 1), may be empty

    std::size_t size() const noexcept { return centroids.size(); }
    std::int64_t total_weight() const;
    double mass(std::size_t j) const;
    // Throws ConfigError if the invariants do not hold.
    void validate() const;

    static QuantizedConditional uniform(std::vector<double> centroids);
};

// Throws InsufficientSupportError when the learner has fewer than two
// vertices, NotStoppedError when it has not quenched.
QuantizedConditional centroids_from_learner(const SubgroupLearner& learner);

// Coupling between two quantized conditionals, stored sparsely with row and
// column indexes so that either conditional can be sampled quickly.
class TransportPlan {
public:
    struct Entry {
        std::size_t i;
        std::size_t j;
        double mass;
    };

    TransportPlan() = default;
    // Entries with zero mass are dropped. Throws ConfigError on indices out
    // of range, negative or non-finite masses, an empty row or column, or a
    // total mass that is off 1 by more than 1e-10.
    TransportPlan(std::size_t rows, std::size_t cols, std::vector<Entry> entries);

    static TransportPlan from_dense(const std::vector<std::vector<double>>& dense);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<std::vector<double>> dense() const;
    double at(std::size_t i, std::size_t j) const;

    double row_mass(std::size_t i) const;
    double col_mass(std::size_t j) const;

    // Draw a column given row i (or a row given column j) with probability
    // proportional to the plan entries.
    std::size_t sample_col(std::size_t i, Rng& rng) const;
    std::size_t sample_row(std::size_t j, Rng& rng) const;

    bool is_monotone() const;
    // Sum of (a_i - b_j)^2 * mass.
    double cost(std::span<const double> a, std::span<const double> b) const;

private:
    void index();

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Entry> entries_;  // sorted by (i, j)
    std::vector<std::size_t> row_start_;
    std::vector<double> row_cum_;  // cumulative mass within each row
    std::vector<std::size_t> col_start_;
    std::vector<std::size_t> col_order_;  // entry indices sorted by (j, i)
    std::vector<double> col_cum_;
};

// Squared-distance optimal coupling of two 1-D discrete laws: the monotone
// (north-west corner) plan over the sorted centroids, computed in integer
// units of 1/(W0*W1) so the marginals are exact.
TransportPlan solve_plan(const QuantizedConditional& mu0, const QuantizedConditional& mu1);

// Bernoulli rounding of x onto the grid. With snap, an x equal to one of the
// source vertices goes to the centroid of the cell it anchors.
std::size_t round_to_grid(double x, const QuantizedConditional& q, Rng& rng, bool snap = false);

struct RepairPair {
    QuantizedConditional q0;  // s = 0
    QuantizedConditional q1;  // s = 1
    TransportPlan plan;
};

struct RepairModel {
    std::array<std::optional<RepairPair>, 2> by_u;
    AttributeWeights weights;
    double t = 0.5;
    bool snap_vertices = true;

    bool fitted(int u) const { return u >= 0 && u <= 1 && by_u[static_cast<std::size_t>(u)].has_value(); }
};

RepairPair make_pair(QuantizedConditional q0, QuantizedConditional q1);

// Builds a model for every u whose two learners are quenched with n-hat >= 2.
RepairModel fit_repair_model(const PerSubgroup<const SubgroupLearner*>& learners, const AttributeWeights& weights,
                             bool snap_vertices = true);

// Throws UnfittedGroupError if u has no fitted pair.
double repair(const RepairModel& model, const LabelledDatum& datum, Rng& rng);

// Element-wise repair; datum i uses Rng::substream(seed, i), so the result
// does not depend on `threads`.
std::vector<LabelledDatum> repair_batch(const RepairModel& model, std::span<const LabelledDatum> data,
                                        std::uint64_t seed, unsigned threads = 1);

// Repairs every subgroup of a dataset, keeping its shape.
ResearchDataset repair_dataset(const RepairModel& model, const ResearchDataset& data, std::uint64_t seed,
                               unsigned threads = 1);

}  // namespace sbr
