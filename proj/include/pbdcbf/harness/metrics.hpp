#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>

#include "pbdcbf/harness/runner.hpp"

namespace pbdcbf::harness {

struct Metrics {
    std::size_t ticks = 0;
    double rms_tracking_error = 0.0;  // m, over every agent and tick
    double max_tracking_error = 0.0;
    double min_h_coll = std::numeric_limits<double>::infinity();
    double min_distance = std::numeric_limits<double>::infinity();
    double max_pair_distance = -std::numeric_limits<double>::infinity();
    double min_pair_distance = std::numeric_limits<double>::infinity();
    /// Largest distance - d_max over pairs with limits; <= 0 means never overstretched.
    double max_stretch_excess = -std::numeric_limits<double>::infinity();
    double min_h_stretch = std::numeric_limits<double>::infinity();
    double min_h_prox = std::numeric_limits<double>::infinity();
    /// Ticks with a negative barrier value, keyed "collision", "stretch", "proximity".
    std::map<std::string, std::size_t> violation_ticks{{"collision", 0}, {"stretch", 0}, {"proximity", 0}};
    std::size_t infeasible_solves = 0;
    std::size_t degenerate_solves = 0;
    std::size_t dropped_collision_rows = 0;
    double mean_solve_time = 0.0;  // s
    double max_solve_time = 0.0;
    double mean_sim_step_time = 0.0;     // s, nominal world per tick (tick 0 excluded)
    double mean_sim_substep_time = 0.0;  // s
    double mean_replica_step_time = 0.0; // s, all replicas per tick
};

/// Throws std::invalid_argument for an empty log.
Metrics compute_metrics(std::span<const TickLog> ticks);

}  // namespace pbdcbf::harness
