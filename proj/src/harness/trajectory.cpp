#include "pbdcbf/harness/trajectory.hpp"

#include <stdexcept>

namespace pbdcbf::harness {

LeaderTrajectory::LeaderTrajectory(const Vec3& start, std::vector<Waypoint> waypoints) : start_(start)
{
    Vec3 from = start;
    double t = 0.0;
    for (const auto& w : waypoints) {
        if (!(w.speed > 0.0) || !(w.dwell >= 0.0))
            throw std::invalid_argument("waypoint needs speed > 0 and dwell >= 0");
        Leg leg;
        leg.from = from;
        leg.to = w.position;
        leg.start = t;
        leg.arrive = t + (w.position - from).norm() / w.speed;
        leg.dwell_end = leg.arrive + w.dwell;
        legs_.push_back(leg);
        from = w.position;
        t = leg.dwell_end;
    }
}

Vec3 LeaderTrajectory::position(double t) const
{
    if (legs_.empty() || t <= 0.0)
        return start_;
    for (const auto& leg : legs_) {
        if (t >= leg.dwell_end)
            continue;
        if (t >= leg.arrive || leg.arrive <= leg.start)
            return leg.to;
        const double s = (t - leg.start) / (leg.arrive - leg.start);
        return leg.from + s * (leg.to - leg.from);
    }
    return legs_.back().to;
}

}  // namespace pbdcbf::harness
