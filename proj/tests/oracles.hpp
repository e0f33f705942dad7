// Test-only reference computations. Nothing here is used by the library.
#pragma once

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// log density of Dir(a) at p (p on the simplex, all entries > 0)
inline double log_dir_pdf(const std::vector<double>& a, const std::vector<double>& p) {
    double a0 = 0.0, r = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        a0 += a[j];
        r += (a[j] - 1.0) * std::log(p[j]) - std::lgamma(a[j]);
    }
    return r + std::lgamma(a0);
}

// KLD(Dir(a) || Dir(b)) by numerical integration of f_a ln(f_a / f_b) over
// the simplex, for 2 or 3 components. Tanh-sinh copes with the integrable
// endpoint singularities that appear when a parameter is below 1.
inline double dirichlet_kld_quadrature(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2 || a.size() > 3) throw std::invalid_argument("2 or 3 components");
    boost::math::quadrature::tanh_sinh<double> ts;
    auto integrand = [&](const std::vector<double>& p) {
        const double la = log_dir_pdf(a, p);
        const double lb = log_dir_pdf(b, p);
        return std::exp(la) * (la - lb);
    };
    if (a.size() == 2) {
        auto f = [&](double x) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            return integrand({x, 1.0 - x});
        };
        return ts.integrate(f, 0.0, 1.0, 1e-12);
    }
    // p1 = x, p2 = (1 - x) t, p3 = (1 - x)(1 - t); Jacobian (1 - x).
    auto outer = [&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        auto inner = [&](double t) {
            if (t <= 0.0 || t >= 1.0) return 0.0;
            return integrand({x, (1.0 - x) * t, (1.0 - x) * (1.0 - t)}) * (1.0 - x);
        };
        return ts.integrate(inner, 0.0, 1.0, 1e-12);
    };
    return ts.integrate(outer, 0.0, 1.0, 1e-10);
}

struct McEstimate {
    double mean;
    double se;
};

// E_{p ~ Dir(a)}[ln Dir_a(p) - ln Dir_b(p)] with gamma-normalised draws.
inline McEstimate dirichlet_kld_mc(const std::vector<double>& a, const std::vector<double>& b, std::size_t n,
                                   std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::vector<std::gamma_distribution<double>> g;
    for (double x : a) g.emplace_back(x, 1.0);
    std::vector<double> p(a.size());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double tot = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) tot += p[j] = g[j](eng);
        for (auto& v : p) v /= tot;
        const double v = log_dir_pdf(a, p) - log_dir_pdf(b, p);
        sum += v;
        sum2 += v * v;
    }
    const double m = sum / static_cast<double>(n);
    const double var = (sum2 / static_cast<double>(n) - m * m) * static_cast<double>(n) / static_cast<double>(n - 1);
    return {m, std::sqrt(var / static_cast<double>(n))};
}

// Dense two-phase simplex with Bland's rule for min c'x, Ax = b, x >= 0.
// Small problems only.
inline double lp_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
    const double eps = 1e-12;
    const std::size_t m = A.size(), n = c.size();
    for (std::size_t i = 0; i < m; ++i)
        if (b[i] < 0) {
            for (auto& v : A[i]) v = -v;
            b[i] = -b[i];
        }
    // tableau: m rows of [A | I | b]
    const std::size_t cols = n + m;
    std::vector<std::vector<double>> T(m, std::vector<double>(cols + 1, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][cols] = b[i];
        basis[i] = n + i;
    }
    auto pivot = [&](std::size_t r, std::size_t e) {
        const double pv = T[r][e];
        for (auto& v : T[r]) v /= pv;
        for (std::size_t i = 0; i < m; ++i)
            if (i != r && T[i][e] != 0.0) {
                const double f = T[i][e];
                for (std::size_t j = 0; j <= cols; ++j) T[i][j] -= f * T[r][j];
            }
        basis[r] = e;
    };
    auto run = [&](const std::vector<double>& cost, std::size_t allowed) {
        for (int iter = 0; iter < 100000; ++iter) {
            // reduced costs
            std::size_t enter = cols;
            for (std::size_t j = 0; j < allowed && enter == cols; ++j) {
                if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
                double rc = cost[j];
                for (std::size_t i = 0; i < m; ++i) rc -= cost[basis[i]] * T[i][j];
                if (rc < -1e-11) enter = j;
            }
            if (enter == cols) return;
            std::size_t leave = m;
            double best = INFINITY;
            for (std::size_t i = 0; i < m; ++i)
                if (T[i][enter] > eps) {
                    const double ratio = T[i][cols] / T[i][enter];
                    if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            if (leave == m) throw std::runtime_error("lp unbounded");
            pivot(leave, enter);
        }
        throw std::runtime_error("lp iteration limit");
    };
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = n; j < cols; ++j) phase1[j] = 1.0;
    run(phase1, cols);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= n) infeas += T[i][cols];
    if (infeas > 1e-9) throw std::runtime_error("lp infeasible");
    // drive remaining artificials out of the basis where possible
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= n)
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(T[i][j]) > 1e-9 && std::find(basis.begin(), basis.end(), j) == basis.end()) {
                    pivot(i, j);
                    break;
                }
    std::vector<double> phase2(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
    run(phase2, n);
    double obj = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) obj += c[basis[i]] * T[i][cols];
    return obj;
}

// Minimum of sum (a_i - b_j)^2 pi_ij over couplings of row masses r and
// column masses s.
inline double transport_lp(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& r,
                           const std::vector<double>& s) {
    const std::size_t m0 = a.size(), m1 = b.size();
    std::vector<std::vector<double>> A;
    std::vector<double> rhs, cost(m0 * m1);
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < m1; ++j) cost[i * m1 + j] = (a[i] - b[j]) * (a[i] - b[j]);
    for (std::size_t i = 0; i < m0; ++i) {
        std::vector<double> row(m0 * m1, 0.0);
        for (std::size_t j = 0; j < m1; ++j) row[i * m1 + j] = 1.0;
        A.push_back(row);
        rhs.push_back(r[i]);
    }
    for (std::size_t j = 0; j < m1; ++j) {
        std::vector<double> row(m0 * m1, 0.0);
        for (std::size_t i = 0; i < m0; ++i) row[i * m1 + j] = 1.0;
        A.push_back(row);
        rhs.push_back(s[j]);
    }
    return lp_min(A, rhs, cost);
}

// A random feasible coupling: the north-west corner rule on randomly
// permuted rows and columns, mixed with a second one.
inline std::vector<std::vector<double>> random_coupling(const std::vector<double>& r, const std::vector<double>& s,
                                                        std::mt19937_64& eng) {
    auto nw_perm = [&](std::vector<std::vector<double>>& P, double scale) {
        std::vector<std::size_t> ri(r.size()), ci(s.size());
        std::iota(ri.begin(), ri.end(), 0);
        std::iota(ci.begin(), ci.end(), 0);
        std::shuffle(ri.begin(), ri.end(), eng);
        std::shuffle(ci.begin(), ci.end(), eng);
        std::size_t i = 0, j = 0;
        double rr = r[ri[0]], cc = s[ci[0]];
        while (i < r.size() && j < s.size()) {
            const double t = std::min(rr, cc);
            P[ri[i]][ci[j]] += scale * t;
            rr -= t;
            cc -= t;
            if (rr <= 1e-15 && ++i < r.size()) rr = r[ri[i]];
            if (cc <= 1e-15 && ++j < s.size()) cc = s[ci[j]];
        }
    };
    std::vector<std::vector<double>> P(r.size(), std::vector<double>(s.size(), 0.0));
    const double w = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
    nw_perm(P, w);
    nw_perm(P, 1.0 - w);
    return P;
}

// Pearson chi-squared p-value; expected counts below 5 are pooled.
inline double chi2_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0.0, pool_o = 0.0, pool_e = 0.0;
    int dof = -1;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 5.0) {
            pool_o += observed[i];
            pool_e += expected[i];
            continue;
        }
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++dof;
    }
    if (pool_e > 0.0) {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++dof;
    }
    if (dof < 1) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// Asymptotic Kolmogorov tail P(K > x).
inline double kolmogorov_sf(double x) {
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
    return std::clamp(s, 0.0, 1.0);
}

// One-sample KS p-value of `sample` against a discrete law given by sorted
// atoms and their probabilities (conservative for discrete laws).
inline double ks_discrete_pvalue(std::vector<double> sample, const std::vector<double>& atoms,
                                 const std::vector<double>& prob) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0, cdf = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        cdf += prob[k];
        const auto cnt = static_cast<double>(std::upper_bound(sample.begin(), sample.end(), atoms[k]) - sample.begin());
        d = std::max(d, std::abs(cnt / n - cdf));
    }
    const double sn = std::sqrt(n);
    return kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

}  // namespace oracle
