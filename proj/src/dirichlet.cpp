#include "sbr/dirichlet.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "sbr/errors.hpp"

namespace sbr {

namespace bm = boost::math;

double DirichletState::total() const {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

double dirichlet_kld(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw InternalError("dirichlet_kld: dimension mismatch");
    double a0 = 0.0, b0 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (!(a[j] >= kAlphaFloor) || !(b[j] >= kAlphaFloor))
            throw InternalError("dirichlet_kld: parameter below floor");
        a0 += a[j];
        b0 += b[j];
    }
    const double psi_a0 = bm::digamma(a0);
    double r = bm::lgamma(a0) - bm::lgamma(b0);
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] == b[j]) continue;
        r += bm::lgamma(b[j]) - bm::lgamma(a[j]) + (a[j] - b[j]) * (bm::digamma(a[j]) - psi_a0);
    }
    return r < 0.0 ? 0.0 : r;
}

double dirichlet_kld_unit_increment(double bj, double b0) {
    // lgamma(x+1) - lgamma(x) = ln x, so the general form collapses to
    // ln b0 - ln bj + psi(bj + 1) - psi(b0 + 1).
    const double r = std::log(b0) - std::log(bj) + bm::digamma(bj + 1.0) - bm::digamma(b0 + 1.0);
    return r < 0.0 ? 0.0 : r;
}

std::size_t locate(std::span<const double> vertices, double x) {
    return static_cast<std::size_t>(std::lower_bound(vertices.begin(), vertices.end(), x) - vertices.begin());
}

DirichletState refine(const DirichletState& prev, std::span<const double> vertices, double x,
                      const PriorSpec& prior) {
    if (prev.alpha.size() != vertices.size() + 1) throw InternalError("refine: state/partition mismatch");
    const std::size_t i = locate(vertices, x);
    if (i < vertices.size() && vertices[i] == x) throw InternalError("refine: vertex already present");
    const double hi = i < vertices.size() ? vertices[i] : INFINITY;
    const double parent = prev.alpha[i];
    const double right = std::max(prior.nu0 * prior_mass(prior, x, hi), kAlphaFloor);
    const double left = std::max(parent - right, kAlphaFloor);
    DirichletState out;
    out.alpha.reserve(prev.alpha.size() + 1);
    out.alpha.insert(out.alpha.end(), prev.alpha.begin(), prev.alpha.begin() + static_cast<std::ptrdiff_t>(i));
    out.alpha.push_back(left);
    out.alpha.push_back(right);
    out.alpha.insert(out.alpha.end(), prev.alpha.begin() + static_cast<std::ptrdiff_t>(i) + 1, prev.alpha.end());
    return out;
}

double kld_step(const DirichletState& prev, std::span<const double> prev_vertices, const DirichletState& curr,
                std::span<const double> curr_vertices, const PriorSpec& prior) {
    if (curr_vertices.size() == prev_vertices.size()) {
        if (!std::equal(prev_vertices.begin(), prev_vertices.end(), curr_vertices.begin()))
            throw InternalError("kld_step: partitions differ");
        return dirichlet_kld(curr.alpha, prev.alpha);
    }
    if (curr_vertices.size() != prev_vertices.size() + 1) throw InternalError("kld_step: more than one new vertex");
    // Find the inserted vertex.
    std::size_t i = 0;
    while (i < prev_vertices.size() && prev_vertices[i] == curr_vertices[i]) ++i;
    if (!std::equal(prev_vertices.begin() + static_cast<std::ptrdiff_t>(i), prev_vertices.end(),
                    curr_vertices.begin() + static_cast<std::ptrdiff_t>(i) + 1))
        throw InternalError("kld_step: current partition does not refine the previous one");
    const DirichletState refined = refine(prev, prev_vertices, curr_vertices[i], prior);
    return dirichlet_kld(curr.alpha, refined.alpha);
}

}  // namespace sbr
