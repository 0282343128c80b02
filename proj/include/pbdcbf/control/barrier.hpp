#pragma once

#include <optional>
#include <string>

#include "pbdcbf/jacobian/replica_set.hpp"

namespace pbdcbf::control {

/// Two-slope piecewise-linear extended class-K-infinity function.
struct PiecewiseLinearAlpha {
    double slope_pos = 2.0;   // 1/s
    double slope_neg = 10.0;  // 1/s
};

double alpha(double h, const PiecewiseLinearAlpha& p);

enum class RowKind { collision, stretch, proximity, speed };

/// a . u >= b
struct ConstraintRow {
    Vec3 a = Vec3::Zero();
    double b = 0.0;
    RowKind kind = RowKind::collision;
    std::string label;
};

std::string to_string(RowKind kind);

/// h = distance - d_offset; row J . u >= -alpha(h). None when J is invalid, with a
/// warning unless `warn` is false.
std::optional<ConstraintRow> build_collision_row(const jacobian::JacobianRow& J, double distance, double d_offset,
                                                 const PiecewiseLinearAlpha& p, const std::string& label = "collision",
                                                 bool warn = true);

enum class PairKind { stretch, proximity };

struct PairLimits {
    double d_min = 0.0;
    double d_max = 0.0;
};

/// Barrier value of a pair: d_max - |x_j - x_i| (stretch) or |x_j - x_i| - d_min (proximity).
double pair_barrier(const Vec3& x_i, const Vec3& x_j, const PairLimits& limits, PairKind kind);

/// Throws std::invalid_argument for coincident agents.
ConstraintRow build_pair_row(const Vec3& x_i, const Vec3& x_j, const Vec3& xdot_j, const PairLimits& limits,
                             const PiecewiseLinearAlpha& p, PairKind kind, const std::string& label = {});

struct NeighborTrack {
    Vec3 last_position = Vec3::Zero();
    Vec3 velocity_estimate = Vec3::Zero();
    double smoothing = 0.5;
    bool initialized = false;
};

/// Exponentially smoothed finite-difference velocity; the first observation gives zero.
Vec3 estimate_neighbor_velocity(NeighborTrack& track, const Vec3& new_position, double dt);

}  // namespace pbdcbf::control
