#pragma once

#include <cstddef>
#include <span>

#include "pbdcbf/pbd/world.hpp"

namespace pbdcbf::pbd {

/// Counters from constraint projection. Degenerate elements are skipped, not fatal.
struct SolveReport {
    std::size_t degenerate_edges = 0;
    std::size_t renormalized_quaternions = 0;

    SolveReport& operator+=(const SolveReport& other) {
        degenerate_edges += other.degenerate_edges;
        renormalized_quaternions += other.renormalized_quaternions;
        return *this;
    }
};

/// XPBD distance projection |p_i - p_j| = rest, one Gauss-Seidel pass.
/// `lambdas` holds one accumulated multiplier per constraint (reset per substep).
SolveReport solve_stretch(ClothObject& cloth, double h, std::span<double> lambdas);
SolveReport solve_bending(ClothObject& cloth, double h, std::span<double> lambdas);

enum class SweepOrder { forward, backward };

/// One Gauss-Seidel pass of the combined zero-stretch/bending/twisting constraint.
/// `lambdas` holds six multipliers per constraint.
SolveReport solve_sbt(RodObject& rod, double h, std::span<double> lambdas,
                      SweepOrder order = SweepOrder::forward);

/// v <- v (1 - c h), likewise angular velocity. c h is clamped to [0, 1].
void apply_damping(WorldState& world, double h);

/// Advances num_steps x num_substeps substeps. Throws IntegrationDiverged.
SolveReport step(WorldState& world);

/// Darboux quaternion conj(q0) q1 of two consecutive segments.
Quat darboux(const RigidSegment& first, const RigidSegment& second);

}  // namespace pbdcbf::pbd
