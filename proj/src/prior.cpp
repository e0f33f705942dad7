#include "sbr/prior.hpp"

#include <algorithm>
#include <cmath>

#include "sbr/errors.hpp"

namespace sbr {

PriorSpec PriorSpec::uniform(double x_min, double x_max, double nu0) {
    PriorSpec p{Kind::uniform, x_min, x_max, nu0};
    p.validate();
    return p;
}

PriorSpec PriorSpec::gaussian(double mean, double sd, double nu0) {
    PriorSpec p{Kind::gaussian, mean, sd, nu0};
    p.validate();
    return p;
}

void PriorSpec::validate() const {
    if (!(nu0 > 0.0) || !std::isfinite(nu0)) throw ConfigError("prior nu0 must be positive and finite");
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("prior parameters must be finite");
    if (kind == Kind::uniform && !(a < b)) throw ConfigError("uniform prior needs x_min < x_max");
    if (kind == Kind::gaussian && !(b > 0.0)) throw ConfigError("gaussian prior needs sd > 0");
}

double PriorSpec::cdf(double x) const {
    if (kind == Kind::uniform) {
        if (x <= a) return 0.0;
        if (x >= b) return 1.0;
        return (x - a) / (b - a);
    }
    if (x == -INFINITY) return 0.0;
    if (x == INFINITY) return 1.0;
    return 0.5 * std::erfc(-(x - a) / (b * std::sqrt(2.0)));
}

double PriorSpec::sf(double x) const {
    if (kind == Kind::uniform) return 1.0 - cdf(x);
    if (x == -INFINITY) return 1.0;
    if (x == INFINITY) return 0.0;
    return 0.5 * std::erfc((x - a) / (b * std::sqrt(2.0)));
}

bool PriorSpec::outside_support(double x) const {
    return kind == Kind::uniform && (x < a || x > b);
}

double prior_mass(const PriorSpec& prior, double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    double m;
    // Differences of survival functions keep precision when both ends sit
    // in the upper tail.
    if (prior.kind == PriorSpec::Kind::gaussian && lo > prior.a)
        m = prior.sf(lo) - prior.sf(hi);
    else
        m = prior.cdf(hi) - prior.cdf(lo);
    return std::clamp(m, 0.0, 1.0);
}

}  // namespace sbr
