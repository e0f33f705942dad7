#include "sbr/datamodel.hpp"

#include <cmath>
#include <numeric>

#include "sbr/errors.hpp"

namespace sbr {

std::string SubgroupKey::label() const {
    return "(u=" + std::to_string(u) + ",s=" + std::to_string(s) + ")";
}

ResearchDataset::ResearchDataset(PerSubgroup<std::vector<double>> groups) : groups_(std::move(groups)) {}

PerSubgroup<std::size_t> ResearchDataset::counts() const {
    PerSubgroup<std::size_t> c{};
    for (std::size_t i = 0; i < 4; ++i) c[i] = groups_[i].size();
    return c;
}

std::size_t ResearchDataset::total() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.size();
    return n;
}

void ResearchDataset::append(const LabelledDatum& d) {
    groups_[SubgroupKey{d.u, d.s}.index()].push_back(d.x);
}

std::vector<LabelledDatum> ResearchDataset::records() const {
    std::vector<LabelledDatum> out;
    out.reserve(total());
    for (auto key : kSubgroups)
        for (double x : group(key)) out.push_back({x, key.u, key.s});
    return out;
}

AttributeWeights::AttributeWeights(PerSubgroup<double> p) : p_(p) {
    double sum = 0.0;
    for (double v : p_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("attribute weights must be finite and nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("attribute weights must sum to 1");
}

AttributeWeights AttributeWeights::from_conditionals(double pr_u0, double pr_s1_given_u0, double pr_s1_given_u1) {
    const double pr_u1 = 1.0 - pr_u0;
    return AttributeWeights({pr_u0 * (1.0 - pr_s1_given_u0), pr_u0 * pr_s1_given_u0, pr_u1 * (1.0 - pr_s1_given_u1),
                             pr_u1 * pr_s1_given_u1});
}

double AttributeWeights::pr_u(int u) const {
    return p({u, 0}) + p({u, 1});
}

std::optional<double> AttributeWeights::pr_s_given_u(int s, int u) const {
    const double pu = pr_u(u);
    if (pu <= 0.0) return std::nullopt;
    return p({u, s}) / pu;
}

ResearchDataset segment(std::span<const LabelledDatum> data) {
    ResearchDataset out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& d = data[i];
        if (!std::isfinite(d.x)) throw RecordError(i, "non-finite feature");
        if ((d.u != 0 && d.u != 1) || (d.s != 0 && d.s != 1)) throw RecordError(i, "attribute outside {0,1}");
        out.append(d);
    }
    return out;
}

AttributeWeights empirical_weights(const ResearchDataset& d) {
    const std::size_t n = d.total();
    if (n == 0) throw UndefinedWeightsError("empirical weights of an empty dataset are undefined");
    PerSubgroup<double> p{};
    const auto counts = d.counts();
    for (std::size_t i = 0; i < 4; ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    // The last entry absorbs rounding so the sum is exactly representable as 1.
    p[3] = 1.0 - (p[0] + p[1] + p[2]);
    if (p[3] < 0.0) p[3] = 0.0;
    return AttributeWeights(p);
}

bool has_representation_bias(SubgroupKey key, const AttributeWeights& weights, std::int64_t n,
                             std::int64_t stopping_number) {
    return weights.p(key) * static_cast<double>(n) < static_cast<double>(stopping_number);
}

}  // namespace sbr
