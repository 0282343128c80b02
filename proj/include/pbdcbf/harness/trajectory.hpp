#pragma once

#include <vector>

#include "pbdcbf/harness/config.hpp"

namespace pbdcbf::harness {

/// Piecewise-linear leader path: straight legs at each waypoint's speed, then its dwell.
class LeaderTrajectory {
public:
    LeaderTrajectory(const Vec3& start, std::vector<Waypoint> waypoints);

    Vec3 position(double t) const;
    /// Time at which the last dwell ends; the leader is static afterwards.
    double end_time() const { return legs_.empty() ? 0.0 : legs_.back().dwell_end; }

private:
    struct Leg {
        Vec3 from;
        Vec3 to;
        double start = 0.0;
        double arrive = 0.0;
        double dwell_end = 0.0;
    };
    Vec3 start_;
    std::vector<Leg> legs_;
};

}  // namespace pbdcbf::harness
