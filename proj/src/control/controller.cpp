#include "pbdcbf/control/controller.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <stdexcept>

namespace pbdcbf::control {

namespace {

std::pair<AgentId, AgentId> ordered(const AgentId& i, const AgentId& j)
{
    return i < j ? std::make_pair(i, j) : std::make_pair(j, i);
}

}  // namespace

std::optional<PairLimits> ControllerParams::limits(const AgentId& i, const AgentId& j) const
{
    const auto it = pair_limits.find(ordered(i, j));
    if (it == pair_limits.end())
        return std::nullopt;
    return it->second;
}

void ControllerParams::set_limits(const AgentId& i, const AgentId& j, const PairLimits& l)
{
    pair_limits[ordered(i, j)] = l;
}

void validate(const ControllerParams& p)
{
    std::ostringstream err;
    if (!(p.k_p > 0.0))
        err << "k_p must be positive; ";
    if (!(p.u_max > 0.0))
        err << "u_max must be positive; ";
    if (!(p.gamma.array() > 0.0).all())
        err << "gamma components must be positive; ";
    if (!(p.d_offset >= 0.0))
        err << "d_offset must be non-negative; ";
    if (!(p.eps_j > 0.0))
        err << "eps_j must be positive; ";
    if (!(p.smoothing >= 0.0 && p.smoothing < 1.0))
        err << "smoothing must lie in [0, 1); ";
    for (const auto* a : {&p.alpha_coll, &p.alpha_stretch, &p.alpha_prox})
        if (!(a->slope_pos > 0.0) || !(a->slope_neg > 0.0)) {
            err << "alpha slopes must be positive; ";
            break;
        }
    for (const auto& [key, l] : p.pair_limits)
        if (!(l.d_min >= 0.0) || !(l.d_min < l.d_max))
            err << "pair (" << key.first << ", " << key.second << ") needs 0 <= d_min < d_max; ";
    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("invalid controller parameters: " + msg);
}

Vec3 nominal_control(const Vec3& leader_pos, const Vec3& agent_pos, const ControllerState& state, double k_p)
{
    return k_p * (state.p_r0 + leader_pos - agent_pos);
}

SafetyController::SafetyController(AgentId agent, ControllerParams params)
    : agent_(std::move(agent)), params_(std::move(params))
{
    validate(params_);
}

void SafetyController::initialize(const Vec3& agent_pos, const Vec3& leader_pos)
{
    state_.p_r0 = agent_pos - leader_pos;
    state_.neighbor_tracks.clear();
    state_.collision_row_valid.clear();
}

ControlOutput SafetyController::control_tick(const Observation& obs, bool bypass_qp)
{
    ControlOutput out;
    ControlDiagnostics& diag = out.diagnostics;
    diag.u_nom = nominal_control(obs.leader_position, obs.agent_position, state_, params_.k_p);

    if (obs.measurements && !obs.measurements->nominal.minimum.infinite) {
        const auto& per = obs.measurements->nominal.per_obstacle;
        state_.collision_row_valid.resize(per.size(), true);
        for (std::size_t k = 0; k < per.size(); ++k) {
            const jacobian::JacobianRow J =
                jacobian::jacobian_row(*obs.measurements, obs.replica_agent_index, obs.delta, params_.eps_j, k);
            const double f = per[k].signed_distance();
            diag.h_coll.push_back(f - params_.d_offset);
            diag.jacobians.push_back(J);
            const std::string label = "collision[" + std::to_string(k) + "]";
            const bool warn = state_.collision_row_valid[k];
            auto row = build_collision_row(J, f, params_.d_offset, params_.alpha_coll, label + " " + agent_, warn);
            state_.collision_row_valid[k] = J.valid;
            if (row) {
                row->label = label;
                diag.rows.push_back(*row);
            } else {
                ++diag.dropped_collision_rows;
            }
        }
    }

    for (const auto& [peer, pos] : obs.peer_positions) {
        auto [it, inserted] = state_.neighbor_tracks.try_emplace(peer);
        if (inserted)
            it->second.smoothing = params_.smoothing;
        const Vec3 xdot = estimate_neighbor_velocity(it->second, pos, obs.dt);
        const auto lim = params_.limits(agent_, peer);
        if (!lim)
            continue;
        const double hs = pair_barrier(obs.agent_position, pos, *lim, PairKind::stretch);
        const double hp = pair_barrier(obs.agent_position, pos, *lim, PairKind::proximity);
        diag.min_h_stretch = std::min(diag.min_h_stretch, hs);
        diag.min_h_prox = std::min(diag.min_h_prox, hp);
        diag.rows.push_back(build_pair_row(obs.agent_position, pos, xdot, *lim, params_.alpha_stretch,
                                           PairKind::stretch, "stretch(" + agent_ + "," + peer + ")"));
        diag.rows.push_back(build_pair_row(obs.agent_position, pos, xdot, *lim, params_.alpha_prox,
                                           PairKind::proximity, "proximity(" + agent_ + "," + peer + ")"));
    }

    if (bypass_qp) {
        const auto t0 = std::chrono::steady_clock::now();
        out.qp.u = diag.u_nom.cwiseMax(-params_.u_max).cwiseMin(params_.u_max);
        out.qp.status = QPStatus::optimal;
        out.qp.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }
    out.qp = solve_qp(diag.u_nom, params_.gamma, diag.rows, params_.u_max);
    return out;
}

}  // namespace pbdcbf::control
