#include "sbr/geometric.hpp"

#include <algorithm>
#include <cmath>

#include "sbr/errors.hpp"

namespace sbr {

QuantileRepairModel fit_geometric(const ResearchDataset& data) {
    QuantileRepairModel m;
    for (auto key : kSubgroups) {
        if (data.count(key) == 0)
            throw InsufficientSupportError("geometric repair: subgroup " + key.label() + " is empty");
        auto& v = m.sorted[key.index()];
        v = data.group(key);
        std::sort(v.begin(), v.end());
    }
    return m;
}

double empirical_quantile(const std::vector<double>& sorted, double r) {
    const auto n = static_cast<double>(sorted.size());
    const double h = std::clamp(r * n - 0.5, 0.0, n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double repair_geometric(const QuantileRepairModel& model, const LabelledDatum& datum) {
    const SubgroupKey key{datum.u, datum.s};
    const auto& own = model.sorted[key.index()];
    const auto [first, last] = std::equal_range(own.begin(), own.end(), datum.x);
    if (first == last)
        throw OffSampleUnsupportedError("geometric repair cannot map a value outside its fitted sample");
    const auto lo = static_cast<double>(first - own.begin());
    const auto hi = static_cast<double>(last - own.begin());
    const double r = (lo + hi) / (2.0 * static_cast<double>(own.size()));
    return 0.5 * empirical_quantile(model.sorted[SubgroupKey{datum.u, 0}.index()], r) +
           0.5 * empirical_quantile(model.sorted[SubgroupKey{datum.u, 1}.index()], r);
}

ResearchDataset repair_geometric(const QuantileRepairModel& model, const ResearchDataset& data) {
    PerSubgroup<std::vector<double>> out;
    for (auto key : kSubgroups) {
        const auto& xs = data.group(key);
        auto& o = out[key.index()];
        o.reserve(xs.size());
        for (double x : xs) o.push_back(repair_geometric(model, {x, key.u, key.s}));
    }
    return ResearchDataset(std::move(out));
}

}  // namespace sbr
