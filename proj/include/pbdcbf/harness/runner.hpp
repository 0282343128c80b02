#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pbdcbf/control/controller.hpp"
#include "pbdcbf/harness/config.hpp"
#include "pbdcbf/harness/trajectory.hpp"
#include "pbdcbf/jacobian/replica_set.hpp"

namespace pbdcbf::harness {

struct AgentTick {
    AgentId id;
    Vec3 position = Vec3::Zero();
    Vec3 u_nom = Vec3::Zero();
    Vec3 u = Vec3::Zero();  // command applied over the next tick
    control::QPStatus status = control::QPStatus::optimal;
    std::vector<std::string> active_labels;
    double solve_time = 0.0;  // s, wall clock
    Vec3 error = Vec3::Zero();  // p_r0 + x_l - x_i
    double error_norm = 0.0;
    std::vector<double> h_coll;  // per obstacle
    std::size_t dropped_collision_rows = 0;
};

struct PairTick {
    AgentId first;
    AgentId second;
    double distance = 0.0;
    std::optional<double> h_stretch;  // only for pairs with configured limits
    std::optional<double> h_prox;
};

struct TickLog {
    std::size_t tick = 0;
    double t = 0.0;
    Vec3 leader_pos = Vec3::Zero();
    std::vector<AgentTick> agents;
    double min_distance = std::numeric_limits<double>::infinity();  // signed
    double h_coll = std::numeric_limits<double>::infinity();        // min_distance - d_offset
    std::size_t obstacle_index = 0;
    Vec3 object_witness = Vec3::Zero();
    Vec3 obstacle_witness = Vec3::Zero();
    std::vector<PairTick> pairs;
    // Wall-clock timings, excluded from the deterministic CSV.
    double sim_step_seconds = 0.0;      // nominal world, whole tick
    double sim_substep_seconds = 0.0;   // nominal world, per substep
    double replica_step_seconds = 0.0;  // every replica, whole tick
};

struct SimulationOptions {
    bool bypass_qp = false;  // test mode: u = u_nom clipped to the speed box
};

/// One closed-loop session: world, replicas, controllers and the leader script.
/// The constructor settles the object and records tick 0.
class Simulation {
public:
    explicit Simulation(ScenarioConfig config, SimulationOptions options = {});

    const ScenarioConfig& config() const { return config_; }
    const TickLog& last() const { return last_; }
    std::size_t tick() const { return last_.tick; }
    double time() const { return last_.t; }
    std::size_t total_ticks() const { return total_ticks_; }
    bool finished() const { return last_.tick >= total_ticks_; }

    /// Moves the leader, steps all replicas with the last commands, runs every
    /// controller. Throws jacobian::ReplicaDiverged.
    const TickLog& advance();

    /// Teleoperation: from now on the leader moves at `v` (clamped to leader.speed_max)
    /// instead of following the waypoints. Returns the clamped velocity.
    Vec3 set_leader_velocity(const Vec3& v);
    std::optional<Vec3> leader_velocity() const { return teleop_velocity_; }

    const pbd::WorldState& world() const { return replicas_->nominal(); }
    geometry::ObjectGeometry object_geometry() const;
    const std::vector<control::SafetyController>& controllers() const { return controllers_; }
    /// Per agent, the p_r0 fixed at t = 0.
    std::vector<Vec3> reference_offsets() const;

private:
    void settle();
    void observe_and_control();

    ScenarioConfig config_;
    SimulationOptions options_;
    std::unique_ptr<jacobian::ReplicaSet> replicas_;
    std::vector<control::SafetyController> controllers_;
    LeaderTrajectory trajectory_;
    std::size_t total_ticks_ = 0;
    std::optional<Vec3> teleop_velocity_;
    std::map<AgentId, Vec3> commands_;
    std::mt19937_64 rng_;
    TickLog last_;
};

struct RunResult {
    std::vector<TickLog> ticks;
    std::optional<std::string> error;  // set when the run aborted (divergence)
    double wall_seconds = 0.0;
};

/// Runs until the configured duration. `on_tick` sees every tick as it is produced.
/// Divergence stops the run; the ticks produced so far are kept and `error` is set.
RunResult run(const ScenarioConfig& config, SimulationOptions options = {},
              const std::function<void(const TickLog&)>& on_tick = {});

}  // namespace pbdcbf::harness
