#include "sbr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sbr/errors.hpp"

namespace sbr {

void HistogramOptions::validate() const {
    if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("histogram smoothing must be positive");
}

namespace {

std::vector<double> bin_masses(std::span<const double> xs, const std::vector<double>& edges, double lambda) {
    const std::size_t nb = edges.size() - 1;
    std::vector<double> counts(nb, 0.0);
    const double lo = edges.front();
    const double width = (edges.back() - lo) / static_cast<double>(nb);
    for (double x : xs) {
        auto b = static_cast<std::size_t>(std::clamp((x - lo) / width, 0.0, static_cast<double>(nb - 1)));
        // The division can land one bin off next to an edge; settle it on
        // the edge array itself.
        while (b > 0 && x < edges[b]) --b;
        while (b + 1 < nb && x >= edges[b + 1]) ++b;
        counts[b] += 1.0;
    }
    const double denom = static_cast<double>(xs.size()) + static_cast<double>(nb) * lambda;
    for (auto& c : counts) c = (c + lambda) / denom;
    return counts;
}

}  // namespace

std::pair<HistogramDensity, HistogramDensity> estimate_hist(std::span<const double> a, std::span<const double> b,
                                                            const HistogramOptions& opt) {
    opt.validate();
    if (a.empty() || b.empty()) throw EstimationError("cannot estimate a density from an empty sample");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto xs : {a, b})
        for (double x : xs) {
            if (!std::isfinite(x)) throw EstimationError("non-finite value in sample");
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    lo -= 1e-9;
    hi += 1e-9;
    std::vector<double> edges(static_cast<std::size_t>(opt.bins) + 1);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(opt.bins);
    edges.back() = hi;
    HistogramDensity pa{edges, bin_masses(a, edges, opt.lambda)};
    HistogramDensity pb{edges, bin_masses(b, edges, opt.lambda)};
    return {std::move(pa), std::move(pb)};
}

double kld(const HistogramDensity& p, const HistogramDensity& q) {
    if (p.edges != q.edges || p.mass.size() != q.mass.size())
        throw IncompatibleDensityError("densities are not defined on the same bins");
    double r = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i)
        if (p.mass[i] > 0.0) r += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
    return r < 0.0 ? 0.0 : r;
}

double sym_kld(const HistogramDensity& p, const HistogramDensity& q) {
    // Sum termwise so the result is exactly symmetric in (p, q).
    if (p.edges != q.edges || p.mass.size() != q.mass.size())
        throw IncompatibleDensityError("densities are not defined on the same bins");
    double r = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i) r += (p.mass[i] - q.mass[i]) * (std::log(p.mass[i]) - std::log(q.mass[i]));
    r *= 0.5;
    return r < 0.0 ? 0.0 : r;
}

namespace {
void require_nonempty(const ResearchDataset& d, const char* which) {
    for (auto key : kSubgroups)
        if (d.count(key) == 0) throw EstimationError(std::string(which) + " subgroup " + key.label() + " is empty");
}
}  // namespace

UnfairnessReport unfairness(const ResearchDataset& data, const HistogramOptions& opt, const AttributeWeights* weights) {
    require_nonempty(data, "unfairness:");
    const AttributeWeights w = weights ? *weights : empirical_weights(data);
    UnfairnessReport rep;
    for (int u = 0; u <= 1; ++u) {
        const auto [p, q] = estimate_hist(data.group({u, 0}), data.group({u, 1}), opt);
        rep.per_u[static_cast<std::size_t>(u)] = sym_kld(p, q);
        rep.total += w.pr_u(u) * rep.per_u[static_cast<std::size_t>(u)];
    }
    return rep;
}

namespace {
void require_aligned(const ResearchDataset& pre, const ResearchDataset& post) {
    if (pre.counts() != post.counts()) throw DataError("pre and post datasets have different subgroup sizes");
}
}  // namespace

FairnessReport e_hat(const ResearchDataset& pre, const ResearchDataset& post, const HistogramOptions& opt) {
    require_aligned(pre, post);
    const AttributeWeights w = empirical_weights(pre);
    FairnessReport rep;
    rep.pre = unfairness(pre, opt, &w);
    if (!(rep.pre.total > 0.0)) throw UndefinedRatioError("E(pre) is 0: the data is already s-invariant");
    rep.post = unfairness(post, opt, &w);
    rep.e_hat = rep.post.total / rep.pre.total;
    rep.log_e_hat = std::log(rep.e_hat);
    return rep;
}

DamageReport damage(const ResearchDataset& pre, const ResearchDataset& post, const HistogramOptions& opt) {
    require_aligned(pre, post);
    require_nonempty(pre, "damage:");
    const AttributeWeights w = empirical_weights(pre);
    DamageReport rep;
    for (auto key : kSubgroups) {
        const auto [p, q] = estimate_hist(pre.group(key), post.group(key), opt);
        rep.per_group[key.index()] = kld(p, q);
    }
    for (int u = 0; u <= 1; ++u)
        for (int s = 0; s <= 1; ++s) {
            const double pu = w.pr_u(u);
            const double ps = w.pr_s_given_u(s, u).value_or(0.0);
            rep.total += pu * ps * rep.per_group[SubgroupKey{u, s}.index()];
        }
    return rep;
}

}  // namespace sbr
