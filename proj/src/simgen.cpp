#include "sbr/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sbr/errors.hpp"

namespace sbr {

namespace {
std::size_t pick_index(const std::vector<double>& cum, double u) {
    const auto it = std::upper_bound(cum.begin(), cum.end(), u * cum.back());
    return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}
}  // namespace

void GmmSpec::validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size())
        throw ConfigError("gmm: weights, means and sds must have the same nonzero length");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw ConfigError("gmm: negative weight");
        if (!(sds[i] > 0.0) || !std::isfinite(sds[i]) || !std::isfinite(means[i]))
            throw ConfigError("gmm: component needs finite mean and sd > 0");
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("gmm: weights must sum to 1");
}

double GmmSpec::sample(Rng& rng) const {
    std::size_t c = 0;
    if (weights.size() > 1) {
        double u = rng.uniform();
        while (c + 1 < weights.size() && u >= weights[c]) u -= weights[c++];
    }
    return rng.normal(means[c], sds[c]);
}

double GmmSpec::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
    return m;
}

double GmmSpec::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) v += weights[i] * (sds[i] * sds[i] + (means[i] - m) * (means[i] - m));
    return v;
}

std::pair<double, double> GmmSpec::range() const {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < means.size(); ++i) {
        lo = std::min(lo, means[i] - 5.0 * sds[i]);
        hi = std::max(hi, means[i] + 5.0 * sds[i]);
    }
    return {lo, hi};
}

CategoricalSpec::CategoricalSpec(int q) : q_(q) {
    if (q < 1) throw ConfigError("categorical: q must be >= 1");
    support_.resize(static_cast<std::size_t>(q) + 1);
    for (int i = 0; i <= q; ++i) support_[static_cast<std::size_t>(i)] = -5.0 + 10.0 * i / q;
    support_.back() = 5.0;
    prob_.assign(support_.size(), 0.0);
    const double z = std_normal_cdf(5.0) - std_normal_cdf(-5.0);
    for (std::size_t i = 0; i + 1 < support_.size(); ++i)
        prob_[i] = (std_normal_cdf(support_[i + 1]) - std_normal_cdf(support_[i])) / z;
    cum_.resize(static_cast<std::size_t>(q));
    std::partial_sum(prob_.begin(), prob_.end() - 1, cum_.begin());
}

double CategoricalSpec::sample(Rng& rng) const {
    return support_[pick_index(cum_, rng.uniform())];
}

void MixtureModelSpec::validate() const {
    for (const auto& l : laws) l.validate();
    AttributeWeights check(weights.values());
    (void)check;
}

std::pair<double, double> MixtureModelSpec::range() const {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& l : laws) {
        const auto [a, b] = l.range();
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    return {lo, hi};
}

SubgroupKey MixtureModelSpec::sample_key(Rng& rng) const {
    const double u = rng.uniform();
    const auto& p = weights.values();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (p[i] == 0.0) continue;
        acc += p[i];
        last = i;
        if (u < acc) return SubgroupKey::from_index(i);
    }
    return SubgroupKey::from_index(last);
}

MixtureModelSpec rb_model(double pr_u0) {
    if (!(pr_u0 > 0.0 && pr_u0 < 1.0)) throw ConfigError("Pr[U=0] must lie in (0, 1)");
    MixtureModelSpec m;
    m.laws = {GmmSpec::gaussian(-1.0, 1.0), GmmSpec::gaussian(1.0, 1.2), GmmSpec::gaussian(-0.5, 1.2),
              GmmSpec::gaussian(1.5, 0.8)};
    m.weights = AttributeWeights::from_conditionals(pr_u0, 0.5, 0.5);
    return m;
}

MixtureModelSpec intersectional_model() {
    MixtureModelSpec m;
    m.laws = {GmmSpec{{0.8, 0.2}, {-1.0, -5.0}, {1.0, 0.5}}, GmmSpec{{0.6, 0.4}, {1.0, -1.75}, {1.2, 0.5}},
              GmmSpec{{0.5, 0.5}, {-1.0, 3.5}, {1.0, 1.2}}, GmmSpec{{0.1, 0.9}, {-2.0, 5.0}, {0.8, 1.5}}};
    m.weights = AttributeWeights({0.18, 0.12, 0.42, 0.28});
    return m;
}

GmmSpec minority_gmm() {
    return GmmSpec{{0.8, 0.2}, {-1.0, -5.0}, {1.0, 0.5}};
}

std::vector<LabelledDatum> sample_labelled(const MixtureModelSpec& spec, std::size_t n, Rng& rng) {
    std::vector<LabelledDatum> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SubgroupKey key = spec.sample_key(rng);
        out.push_back({spec.laws[key.index()].sample(rng), key.u, key.s});
    }
    return out;
}

std::vector<double> stream_until_quenched(SubgroupLearner& learner, const std::function<double()>& next,
                                          std::int64_t cap) {
    std::vector<double> seen;
    for (std::int64_t t = 0; t < cap && !learner.quenched(); ++t) {
        const double x = next();
        learner.absorb(x);
        seen.push_back(x);
    }
    if (!learner.quenched()) {
        std::ostringstream os;
        os << "learner did not quench within " << cap << " draws (smoothed statistic " << learner.smoothed_kld()
           << ")";
        throw NonConvergenceError(os.str());
    }
    return seen;
}

QuenchRun sample_until_quenched(const MixtureModelSpec& spec, PerSubgroup<SubgroupLearner>& learners, Rng& rng,
                                std::int64_t cap) {
    QuenchRun run;
    PerSubgroup<std::vector<double>> groups;
    auto all_quenched = [&] {
        return std::all_of(learners.begin(), learners.end(), [](const SubgroupLearner& l) { return l.quenched(); });
    };
    while (!all_quenched()) {
        if (run.draws >= cap) {
            std::ostringstream os;
            os << "not all learners quenched within " << cap << " draws; smoothed statistics:";
            for (auto key : kSubgroups)
                os << ' ' << key.label() << '=' << learners[key.index()].smoothed_kld()
                   << (learners[key.index()].quenched() ? " (quenched)" : "");
            throw NonConvergenceError(os.str());
        }
        ++run.draws;
        const SubgroupKey key = spec.sample_key(rng);
        const double x = spec.laws[key.index()].sample(rng);
        auto& l = learners[key.index()];
        if (l.quenched()) {
            ++run.discarded[key.index()];
            continue;
        }
        l.absorb(x);
        groups[key.index()].push_back(x);
    }
    for (auto key : kSubgroups) run.stopping[key.index()] = learners[key.index()].stopping_number();
    run.data = ResearchDataset(std::move(groups));
    return run;
}

PerSubgroup<std::int64_t> biased_counts(const AttributeWeights& w, std::int64_t total) {
    PerSubgroup<std::int64_t> c{};
    for (std::size_t i = 0; i < 4; ++i) c[i] = std::llround(w.values()[i] * static_cast<double>(total));
    return c;
}

ResearchDataset biased_sample(const MixtureModelSpec& spec, const PerSubgroup<std::int64_t>& stopping_numbers,
                              Rng& rng, const std::function<void(const std::string&)>& warn) {
    const std::int64_t total = std::accumulate(stopping_numbers.begin(), stopping_numbers.end(), std::int64_t{0});
    const auto counts = biased_counts(spec.weights, total);
    PerSubgroup<std::vector<double>> groups;
    for (auto key : kSubgroups) {
        const auto n = counts[key.index()];
        if (n == 0 && warn) warn("biased sample: subgroup " + key.label() + " rounds to 0 records");
        auto& g = groups[key.index()];
        g.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) g.push_back(spec.laws[key.index()].sample(rng));
    }
    return ResearchDataset(std::move(groups));
}

}  // namespace sbr
