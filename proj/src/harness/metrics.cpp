#include "pbdcbf/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbdcbf::harness {

Metrics compute_metrics(std::span<const TickLog> ticks)
{
    if (ticks.empty())
        throw std::invalid_argument("cannot compute metrics of an empty log");

    Metrics m;
    m.ticks = ticks.size();
    double sq_error = 0.0;
    std::size_t error_samples = 0;
    double solve_sum = 0.0;
    std::size_t solves = 0;
    double step_sum = 0.0;
    double substep_sum = 0.0;
    double replica_sum = 0.0;
    std::size_t stepped = 0;

    for (const auto& t : ticks) {
        m.min_h_coll = std::min(m.min_h_coll, t.h_coll);
        m.min_distance = std::min(m.min_distance, t.min_distance);
        if (t.h_coll < 0.0)
            ++m.violation_ticks["collision"];

        for (const auto& a : t.agents) {
            sq_error += a.error_norm * a.error_norm;
            ++error_samples;
            m.max_tracking_error = std::max(m.max_tracking_error, a.error_norm);
            solve_sum += a.solve_time;
            ++solves;
            m.max_solve_time = std::max(m.max_solve_time, a.solve_time);
            if (a.status == control::QPStatus::infeasible)
                ++m.infeasible_solves;
            if (a.status == control::QPStatus::degenerate)
                ++m.degenerate_solves;
            m.dropped_collision_rows += a.dropped_collision_rows;
        }

        bool stretched = false;
        bool crowded = false;
        for (const auto& p : t.pairs) {
            m.max_pair_distance = std::max(m.max_pair_distance, p.distance);
            m.min_pair_distance = std::min(m.min_pair_distance, p.distance);
            if (p.h_stretch) {
                m.min_h_stretch = std::min(m.min_h_stretch, *p.h_stretch);
                m.max_stretch_excess = std::max(m.max_stretch_excess, -*p.h_stretch);
                stretched = stretched || *p.h_stretch < 0.0;
            }
            if (p.h_prox) {
                m.min_h_prox = std::min(m.min_h_prox, *p.h_prox);
                crowded = crowded || *p.h_prox < 0.0;
            }
        }
        m.violation_ticks["stretch"] += stretched ? 1 : 0;
        m.violation_ticks["proximity"] += crowded ? 1 : 0;

        // Tick 0 carries no step of its own.
        if (t.tick > 0) {
            step_sum += t.sim_step_seconds;
            substep_sum += t.sim_substep_seconds;
            replica_sum += t.replica_step_seconds;
            ++stepped;
        }
    }

    if (error_samples > 0)
        m.rms_tracking_error = std::sqrt(sq_error / static_cast<double>(error_samples));
    if (solves > 0)
        m.mean_solve_time = solve_sum / static_cast<double>(solves);
    if (stepped > 0) {
        m.mean_sim_step_time = step_sum / static_cast<double>(stepped);
        m.mean_sim_substep_time = substep_sum / static_cast<double>(stepped);
        m.mean_replica_step_time = replica_sum / static_cast<double>(stepped);
    }
    return m;
}

}  // namespace pbdcbf::harness
