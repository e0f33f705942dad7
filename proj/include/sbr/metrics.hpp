#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "sbr/datamodel.hpp"

namespace sbr {

struct HistogramOptions {
    int bins = 50;
    double lambda = 1e-6;  // additive smoothing per bin

    void validate() const;
    bool operator==(const HistogramOptions&) const = default;
};

struct HistogramDensity {
    std::vector<double> edges;  // bins + 1, strictly increasing
    std::vector<double> mass;   // bins, sums to 1
};

// Both samples binned on shared equal-width edges spanning the union's range
// (padded by 1e-9); mass = (count + lambda) / (n + bins * lambda).
// Throws EstimationError on an empty sample or non-finite values.
std::pair<HistogramDensity, HistogramDensity> estimate_hist(std::span<const double> a, std::span<const double> b,
                                                            const HistogramOptions& opt = {});

// D[p || q] = sum p ln(p/q). Throws IncompatibleDensityError if the edges differ.
double kld(const HistogramDensity& p, const HistogramDensity& q);
double sym_kld(const HistogramDensity& p, const HistogramDensity& q);

struct UnfairnessReport {
    std::array<double, 2> per_u{};
    double total = 0.0;
};

// E_u = sym-KLD between the (u,0) and (u,1) samples; E = sum_u Pr[u] E_u.
// When `weights` is null the empirical weights of `data` are used.
UnfairnessReport unfairness(const ResearchDataset& data, const HistogramOptions& opt = {},
                            const AttributeWeights* weights = nullptr);

struct FairnessReport {
    UnfairnessReport pre;
    UnfairnessReport post;
    double e_hat = 0.0;
    double log_e_hat = 0.0;  // natural log; -inf when e_hat == 0
};

// Throws UndefinedRatioError when E(pre) == 0.
FairnessReport e_hat(const ResearchDataset& pre, const ResearchDataset& post, const HistogramOptions& opt = {});

struct DamageReport {
    PerSubgroup<double> per_group{};
    double total = 0.0;
};

// D_{u,s} = D[F_{u,s} || F'_{u,s}] on shared bins; D = sum p_{u,s} D_{u,s}
// with the pre-repair empirical weights.
DamageReport damage(const ResearchDataset& pre, const ResearchDataset& post, const HistogramOptions& opt = {});

}  // namespace sbr
