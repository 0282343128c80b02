#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbdcbf/geometry/scene.hpp"
#include "pbdcbf/pbd/world.hpp"

namespace pbdcbf::jacobian {

struct ReplicaOptions {
    double delta = 0.1;           // m
    bool parallel = true;
    int resync_interval = 0;      // ticks; 0 never re-clones perturbed replicas
    bool allow_zero_delta = false;  // test hook: replicas then track the nominal exactly
};

struct JacobianRow {
    Vec3 J = Vec3::Zero();
    bool valid = false;
};

/// Raised when any replica diverges; names the replica ("nominal" or "<agent>/<axis>").
class ReplicaDiverged : public pbd::IntegrationDiverged {
public:
    ReplicaDiverged(std::string replica_name, const pbd::IntegrationDiverged& cause)
        : pbd::IntegrationDiverged(cause.body_index, replica_name + ": " + cause.what()),
          replica(std::move(replica_name)) {}
    std::string replica;
};

/// Distances measured on every replica after a tick.
struct ReplicaMeasurements {
    geometry::SceneDistances nominal;
    std::vector<geometry::SceneDistances> perturbed;  // index = agent_index * 3 + axis
};

/// Nominal world plus one persistently offset replica per (perturbed agent, axis).
class ReplicaSet {
public:
    ReplicaSet(const pbd::WorldState& world, std::vector<AgentId> perturbed_agents, ReplicaOptions options = {});

    std::size_t world_count() const { return 1 + perturbed_.size(); }
    double delta() const { return options_.delta; }
    const std::vector<AgentId>& agents() const { return agents_; }
    const pbd::WorldState& nominal() const { return nominal_; }
    const pbd::WorldState& perturbed(const AgentId& agent, int axis) const;
    std::size_t agent_index(const AgentId& agent) const;

    /// Nominal target of an attached agent (perturbed replicas add their offset).
    Vec3 target(const AgentId& agent) const;
    void set_target(const AgentId& agent, const Vec3& target);

    /// Integrates target += u dt for each commanded agent, then steps every replica.
    void tick(const std::map<AgentId, Vec3>& velocity_commands);
    /// Steps every replica with the targets currently set.
    void step();

    ReplicaMeasurements measure(std::span<const geometry::Obstacle> obstacles) const;

    /// Wall-clock seconds each world took in the last step (nominal first).
    const std::vector<double>& last_step_seconds() const { return step_seconds_; }
    std::size_t ticks() const { return ticks_; }

private:
    void apply_offsets();
    void resync();
    std::string replica_name(std::size_t world_index) const;

    ReplicaOptions options_;
    std::vector<AgentId> agents_;
    pbd::WorldState nominal_;
    std::vector<pbd::WorldState> perturbed_;
    std::vector<double> step_seconds_;
    std::size_t ticks_ = 0;
};

/// Forward difference (f(perturbed) - f(nominal)) / delta per axis on signed distance,
/// for the scene minimum or for one obstacle. Invalid when non-finite, when the scene
/// is empty, or when |J| < eps_j.
JacobianRow jacobian_row(const ReplicaMeasurements& m, std::size_t agent_index, double delta, double eps_j = 1e-3,
                         std::optional<std::size_t> obstacle = std::nullopt);

}  // namespace pbdcbf::jacobian
