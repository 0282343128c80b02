#include "pbdcbf/control/barrier.hpp"

#include <stdexcept>

#include <spdlog/spdlog.h>

namespace pbdcbf::control {

double alpha(double h, const PiecewiseLinearAlpha& p)
{
    return h >= 0.0 ? p.slope_pos * h : p.slope_neg * h;
}

std::string to_string(RowKind kind)
{
    switch (kind) {
    case RowKind::collision: return "collision";
    case RowKind::stretch: return "stretch";
    case RowKind::proximity: return "proximity";
    case RowKind::speed: return "speed";
    }
    return "collision";
}

std::optional<ConstraintRow> build_collision_row(const jacobian::JacobianRow& J, double distance, double d_offset,
                                                 const PiecewiseLinearAlpha& p, const std::string& label, bool warn)
{
    if (!J.valid) {
        if (warn)
            spdlog::warn("{}: Jacobian norm {:.3g} below threshold, row dropped", label, J.J.norm());
        return std::nullopt;
    }
    return ConstraintRow{J.J, -alpha(distance - d_offset, p), RowKind::collision, label};
}

double pair_barrier(const Vec3& x_i, const Vec3& x_j, const PairLimits& limits, PairKind kind)
{
    const double d = (x_j - x_i).norm();
    return kind == PairKind::stretch ? limits.d_max - d : d - limits.d_min;
}

ConstraintRow build_pair_row(const Vec3& x_i, const Vec3& x_j, const Vec3& xdot_j, const PairLimits& limits,
                             const PiecewiseLinearAlpha& p, PairKind kind, const std::string& label)
{
    const Vec3 d = x_j - x_i;
    const double n = d.norm();
    if (!(n > 1e-9))
        throw std::invalid_argument("coincident agents in pair constraint " + label);
    const Vec3 a = d / n;
    const double h = pair_barrier(x_i, x_j, limits, kind);
    if (kind == PairKind::stretch)
        return {a, -alpha(h, p) + a.dot(xdot_j), RowKind::stretch, label};
    return {-a, -alpha(h, p) - a.dot(xdot_j), RowKind::proximity, label};
}

Vec3 estimate_neighbor_velocity(NeighborTrack& track, const Vec3& new_position, double dt)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("velocity estimate needs dt > 0");
    if (!track.initialized) {
        track.initialized = true;
        track.last_position = new_position;
        track.velocity_estimate.setZero();
        return track.velocity_estimate;
    }
    const Vec3 raw = (new_position - track.last_position) / dt;
    track.velocity_estimate = track.smoothing * track.velocity_estimate + (1.0 - track.smoothing) * raw;
    track.last_position = new_position;
    return track.velocity_estimate;
}

}  // namespace pbdcbf::control
