#pragma once

#include <span>
#include <vector>

#include "sbr/prior.hpp"

namespace sbr {

inline constexpr double kAlphaFloor = 1e-12;

// Dirichlet parameters over the cells of a vertex partition. With interior
// vertices v_0 < ... < v_{k-1} there are k+1 cells: (-inf, v_0), [v_0, v_1),
// ..., [v_{k-1}, +inf).
struct DirichletState {
    std::vector<double> alpha;

    double total() const;
    std::size_t cells() const noexcept { return alpha.size(); }
};

// KLD(Dir(a) || Dir(b)) in closed form. Sizes must match; entries must be
// positive. Result is clamped at 0 from below (tiny negative rounding).
double dirichlet_kld(std::span<const double> a, std::span<const double> b);

// KLD(Dir(b + e_j) || Dir(b)) where b_j is the receiving cell and b0 the
// total, i.e. the divergence caused by absorbing one observation into a
// fixed partition.
double dirichlet_kld_unit_increment(double bj, double b0);

// Index of the first vertex >= x; the cell containing x is this index when
// x is not a vertex, and index + 1 when it is.
std::size_t locate(std::span<const double> vertices, double x);

// Refine `prev` (over `vertices`) onto the partition with `x` inserted. The
// posterior keeps its atoms at the points where they were observed, so the
// new right child [x, hi) only receives prior mass nu0*F0([x, hi)) and the
// left child keeps the rest. x must not already be a vertex.
DirichletState refine(const DirichletState& prev, std::span<const double> vertices, double x,
                      const PriorSpec& prior);

// KLD between the current state and the previous state after refining the
// previous one onto the current partition. `curr_vertices` must equal
// `prev_vertices` or add exactly one vertex. Throws InternalError otherwise.
double kld_step(const DirichletState& prev, std::span<const double> prev_vertices, const DirichletState& curr,
                std::span<const double> curr_vertices, const PriorSpec& prior);

}  // namespace sbr
