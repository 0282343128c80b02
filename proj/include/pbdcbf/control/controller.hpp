#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pbdcbf/control/qp.hpp"

namespace pbdcbf::control {

struct ControllerParams {
    double k_p = 0.5;                  // 1/s
    Vec3 gamma = Vec3::Ones();
    double u_max = 0.2;                // m/s
    double d_offset = 0.05;            // m
    std::map<std::pair<AgentId, AgentId>, PairLimits> pair_limits;  // keys ordered (lower, higher)
    PiecewiseLinearAlpha alpha_coll;
    PiecewiseLinearAlpha alpha_stretch;
    PiecewiseLinearAlpha alpha_prox;
    double eps_j = 1e-3;
    double smoothing = 0.5;

    std::optional<PairLimits> limits(const AgentId& i, const AgentId& j) const;
    void set_limits(const AgentId& i, const AgentId& j, const PairLimits& limits);
};

/// Throws std::invalid_argument listing every violated parameter invariant.
void validate(const ControllerParams& params);

struct ControllerState {
    Vec3 p_r0 = Vec3::Zero();  // initial pose relative to the leader
    std::map<AgentId, NeighborTrack> neighbor_tracks;
    std::vector<bool> collision_row_valid;  // previous tick, per obstacle; limits warnings to transitions
};

/// k_p (p_r0 + x_l - x_i)
Vec3 nominal_control(const Vec3& leader_pos, const Vec3& agent_pos, const ControllerState& state, double k_p);

/// Everything a controller observes at one tick.
struct Observation {
    Vec3 agent_position = Vec3::Zero();
    Vec3 leader_position = Vec3::Zero();
    std::map<AgentId, Vec3> peer_positions;  // every other agent, leader included
    const jacobian::ReplicaMeasurements* measurements = nullptr;
    std::size_t replica_agent_index = 0;
    double delta = 0.1;
    double dt = 0.02;
};

struct ControlDiagnostics {
    Vec3 u_nom = Vec3::Zero();
    std::vector<ConstraintRow> rows;           // without the speed rows
    std::vector<double> h_coll;                // per obstacle
    std::vector<jacobian::JacobianRow> jacobians;  // per obstacle
    std::size_t dropped_collision_rows = 0;
    double min_h_stretch = std::numeric_limits<double>::infinity();
    double min_h_prox = std::numeric_limits<double>::infinity();
};

struct ControlOutput {
    QPResult qp;
    ControlDiagnostics diagnostics;
};

/// One controller per agent; holds only its own state.
class SafetyController {
public:
    SafetyController(AgentId agent, ControllerParams params);

    /// Fixes p_r0 = x_i - x_l; call once at t = 0.
    void initialize(const Vec3& agent_pos, const Vec3& leader_pos);

    /// Nominal control filtered through the CBF QP. With `bypass_qp` the nominal
    /// command is only clipped to the speed box.
    ControlOutput control_tick(const Observation& obs, bool bypass_qp = false);

    const AgentId& agent() const { return agent_; }
    const ControllerParams& params() const { return params_; }
    const ControllerState& state() const { return state_; }

private:
    AgentId agent_;
    ControllerParams params_;
    ControllerState state_;
};

}  // namespace pbdcbf::control
