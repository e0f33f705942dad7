#pragma once

#include <string>

namespace sbr {

// Base measure F0 and confidence nu0 of the Dirichlet process prior.
struct PriorSpec {
    enum class Kind { uniform, gaussian };

    Kind kind = Kind::uniform;
    double a = -5.0;  // x_min (uniform) or mean (gaussian)
    double b = 5.0;   // x_max (uniform) or sd (gaussian)
    double nu0 = 0.001;

    static PriorSpec uniform(double x_min, double x_max, double nu0);
    static PriorSpec gaussian(double mean, double sd, double nu0);

    // Throws ConfigError on nu0 <= 0, x_min >= x_max or sd <= 0.
    void validate() const;

    double cdf(double x) const;
    // Survival function 1 - cdf(x), accurate in the upper tail.
    double sf(double x) const;
    // True when x is outside the support of F0 (only possible for uniform).
    bool outside_support(double x) const;

    std::string kind_name() const { return kind == Kind::uniform ? "uniform" : "gaussian"; }

    bool operator==(const PriorSpec&) const = default;
};

// F0-probability of [lo, hi). Either end may be infinite.
double prior_mass(const PriorSpec& prior, double lo, double hi);

}  // namespace sbr
