#include "sbr/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbr/errors.hpp"

namespace sbr {

void LearnerConfig::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (k_min < 2) throw ConfigError("k_min must be >= 2");
    if (min_interior_cells < 0) throw ConfigError("min_interior_cells must be >= 0");
}

SubgroupLearner::SubgroupLearner(PriorSpec prior, LearnerConfig config) {
    prior.validate();
    config.validate();
    s_.prior = prior;
    s_.config = config;
    s_.alpha = {prior.nu0};
    s_.counts = {0};
    total_ = prior.nu0;
}

SubgroupLearner::SubgroupLearner(LearnerState state) : s_(std::move(state)) {
    s_.prior.validate();
    s_.config.validate();
    const auto& v = s_.vertices;
    if (s_.alpha.size() != v.size() + 1 || s_.counts.size() != v.size() + 1)
        throw ConfigError("learner state: cell arrays do not match vertices");
    if (!std::is_sorted(v.begin(), v.end()) || std::adjacent_find(v.begin(), v.end()) != v.end())
        throw ConfigError("learner state: vertices not strictly increasing");
    if (std::accumulate(s_.counts.begin(), s_.counts.end(), std::int64_t{0}) != s_.k)
        throw ConfigError("learner state: counts do not sum to k");
    if (s_.k < 0 || s_.stat_history.size() != static_cast<std::size_t>(std::max<std::int64_t>(0, s_.k - 1)) ||
        s_.kld_history.size() != s_.stat_history.size())
        throw ConfigError("learner state: history length does not match k");
    total_ = std::accumulate(s_.alpha.begin(), s_.alpha.end(), 0.0);
}

double SubgroupLearner::nu() const {
    return total_;
}

std::int64_t SubgroupLearner::stopping_number() const {
    if (!s_.quenched) throw NotStoppedError("learner has not quenched (k=" + std::to_string(s_.k) + ")");
    return s_.k;
}

void SubgroupLearner::absorb(double x) {
    if (s_.quenched) throw QuenchedError("absorb into a quenched learner");
    if (!std::isfinite(x)) throw DataError("non-finite observation");

    auto& v = s_.vertices;
    auto& alpha = s_.alpha;
    const std::size_t i = locate(v, x);
    const bool novel = !(i < v.size() && v[i] == x);

    if (novel) {
        if (s_.prior.outside_support(x)) {
            if (s_.out_of_support++ == 0 && warn_)
                warn_("observation outside the prior support; cell parameters clamped at the floor");
        }
        const double hi = i < v.size() ? v[i] : INFINITY;
        const double parent = alpha[i];
        const double right = std::max(s_.prior.nu0 * prior_mass(s_.prior, x, hi), kAlphaFloor);
        const double left = std::max(parent - right, kAlphaFloor);
        total_ += left + right - parent;
        const auto pos = static_cast<std::ptrdiff_t>(i);
        v.insert(v.begin() + pos, x);
        alpha[i] = left;
        alpha.insert(alpha.begin() + pos + 1, right);
        s_.counts.insert(s_.counts.begin() + pos + 1, 0);
    }
    const std::size_t j = i + 1;  // cell whose left endpoint is x

    const double kld = dirichlet_kld_unit_increment(alpha[j], total_);
    const double stat = novel ? kld / static_cast<double>(alpha.size()) : kld;

    alpha[j] += 1.0;
    total_ += 1.0;
    s_.counts[j] += 1;
    s_.k += 1;

    if (s_.k < 2) return;
    s_.kld_history.push_back(kld);
    s_.stat_history.push_back(stat);
    const auto& h = s_.stat_history;
    const std::size_t w = std::min<std::size_t>(h.size(), static_cast<std::size_t>(s_.config.window));
    double sum = 0.0;
    for (std::size_t t = h.size() - w; t < h.size(); ++t) sum += h[t];
    s_.smoothed = sum / static_cast<double>(w);

    const auto interior = static_cast<std::int64_t>(v.size()) - 1;
    if (s_.smoothed < s_.config.epsilon && s_.k >= s_.config.k_min && interior >= s_.config.min_interior_cells)
        s_.quenched = true;
}

double SubgroupLearner::posterior_mean_cdf(double x) const {
    const auto& v = s_.vertices;
    // Atoms of cell c sit at its left endpoint v[c-1]; cell 0 holds none.
    const auto upto = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
    std::int64_t obs = 0;
    for (std::size_t c = 1; c <= upto; ++c) obs += s_.counts[c];
    const double nu0 = s_.prior.nu0;
    return (nu0 * s_.prior.cdf(x) + static_cast<double>(obs)) / (nu0 + static_cast<double>(s_.k));
}

}  // namespace sbr
