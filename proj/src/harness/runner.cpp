#include "pbdcbf/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <execution>
#include <numeric>

#include <spdlog/spdlog.h>

#include "pbdcbf/jacobian/object_geometry.hpp"

namespace pbdcbf::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

pbd::WorldState build_world(const ScenarioConfig& cfg)
{
    pbd::WorldState w;
    if (const auto* rod = std::get_if<pbd::RodSpec>(&cfg.object))
        w.object = pbd::make_rod(*rod);
    else
        w.object = pbd::make_cloth(std::get<pbd::ClothSpec>(cfg.object));
    w.gravity = cfg.sim.gravity;
    w.damping_coefficient = cfg.sim.damping;
    w.substeps.num_steps = cfg.sim.num_steps;
    w.substeps.num_substeps = cfg.sim.num_substeps;
    w.substeps.dt = cfg.run.dt() / cfg.sim.num_steps;
    w.solver_iterations = cfg.sim.solver_iterations;
    pbd::attach(w, cfg.leader.id, cfg.leader.held_body_index);
    for (const auto& a : cfg.agents)
        pbd::attach(w, a.id, a.held_body_index);
    pbd::validate(w);
    return w;
}

Vec3 leader_start(const ScenarioConfig& cfg, const pbd::WorldState& w)
{
    return cfg.leader.initial_position.value_or(w.body_position(cfg.leader.held_body_index));
}

std::vector<AgentId> agent_ids(const ScenarioConfig& cfg)
{
    std::vector<AgentId> ids;
    for (const auto& a : cfg.agents)
        ids.push_back(a.id);
    return ids;
}

}  // namespace

Simulation::Simulation(ScenarioConfig config, SimulationOptions options)
    : config_(std::move(config)), options_(options), trajectory_(Vec3::Zero(), {}), rng_(config_.run.seed)
{
    validate(config_);
    const pbd::WorldState world = build_world(config_);
    trajectory_ = LeaderTrajectory(leader_start(config_, world), config_.leader.waypoints);

    jacobian::ReplicaOptions ro;
    ro.delta = config_.jacobian.delta;
    ro.parallel = config_.jacobian.parallel;
    ro.resync_interval = config_.jacobian.resync_interval;
    replicas_ = std::make_unique<jacobian::ReplicaSet>(world, agent_ids(config_), ro);

    for (const auto& a : config_.agents)
        controllers_.emplace_back(a.id, config_.controller);

    total_ticks_ = static_cast<std::size_t>(std::llround(config_.run.duration * config_.run.tick_rate));

    settle();

    const pbd::WorldState& w = replicas_->nominal();
    const Vec3 leader = w.body_position(config_.leader.held_body_index);
    for (std::size_t i = 0; i < controllers_.size(); ++i)
        controllers_[i].initialize(w.body_position(config_.agents[i].held_body_index), leader);
    last_.tick = 0;
    last_.t = 0.0;
    observe_and_control();
}

// Holders ease from their built positions to the initial ones over the first half
// of the settle time, then hold while the object comes to rest.
void Simulation::settle()
{
    const auto n = static_cast<std::size_t>(std::llround(config_.sim.settle_time * config_.run.tick_rate));
    if (n == 0)
        return;
    const std::size_t ramp = std::max<std::size_t>(1, n / 2);

    std::vector<std::pair<AgentId, std::pair<Vec3, Vec3>>> moves;
    const pbd::WorldState& w = replicas_->nominal();
    moves.push_back({config_.leader.id, {w.body_position(config_.leader.held_body_index), trajectory_.position(0.0)}});
    for (const auto& a : config_.agents)
        moves.push_back({a.id, {w.body_position(a.held_body_index), a.initial_position}});

    for (std::size_t k = 1; k <= n; ++k) {
        const double s = std::min(1.0, static_cast<double>(k) / static_cast<double>(ramp));
        const double ease = 0.5 - 0.5 * std::cos(M_PI * s);
        for (const auto& [id, ends] : moves)
            replicas_->set_target(id, (1.0 - ease) * ends.first + ease * ends.second);
        replicas_->step();
    }
}

const TickLog& Simulation::advance()
{
    const std::size_t next = last_.tick + 1;
    const double dt = config_.run.dt();
    const double t_next = static_cast<double>(next) * dt;

    Vec3 leader_target;
    if (teleop_velocity_)
        leader_target = replicas_->target(config_.leader.id) + dt * *teleop_velocity_;
    else
        leader_target = trajectory_.position(t_next);
    replicas_->set_target(config_.leader.id, leader_target);

    const auto t0 = Clock::now();
    replicas_->tick(commands_);
    const double replica_seconds = seconds_since(t0);

    last_ = TickLog{};
    last_.tick = next;
    last_.t = t_next;
    last_.replica_step_seconds = replica_seconds;
    last_.sim_step_seconds = replicas_->last_step_seconds().front();
    last_.sim_substep_seconds =
        last_.sim_step_seconds / static_cast<double>(config_.sim.num_substeps * config_.sim.num_steps);
    observe_and_control();
    return last_;
}

Vec3 Simulation::set_leader_velocity(const Vec3& v)
{
    if (!v.allFinite())
        throw std::invalid_argument("leader velocity must be finite");
    Vec3 clamped = v;
    const double speed = v.norm();
    if (speed > config_.leader.speed_max)
        clamped *= config_.leader.speed_max / speed;
    teleop_velocity_ = clamped;
    return clamped;
}

geometry::ObjectGeometry Simulation::object_geometry() const { return jacobian::extract_geometry(world()); }

std::vector<Vec3> Simulation::reference_offsets() const
{
    std::vector<Vec3> out;
    for (const auto& c : controllers_)
        out.push_back(c.state().p_r0);
    return out;
}

void Simulation::observe_and_control()
{
    const pbd::WorldState& w = replicas_->nominal();
    const jacobian::ReplicaMeasurements m = replicas_->measure(config_.obstacles);

    const Vec3 leader = w.body_position(config_.leader.held_body_index);
    std::vector<Vec3> positions;
    for (const auto& a : config_.agents)
        positions.push_back(w.body_position(a.held_body_index));

    const double dt = config_.run.dt();
    std::vector<control::Observation> obs(controllers_.size());
    std::normal_distribution<double> noise(0.0, config_.run.observation_noise);
    const auto observed = [&](const Vec3& p) -> Vec3 {
        if (config_.run.observation_noise == 0.0)
            return p;
        return p + Vec3(noise(rng_), noise(rng_), noise(rng_));
    };
    for (std::size_t i = 0; i < controllers_.size(); ++i) {
        auto& o = obs[i];
        o.agent_position = positions[i];
        o.leader_position = observed(leader);
        o.peer_positions[config_.leader.id] = o.leader_position;
        for (std::size_t j = 0; j < positions.size(); ++j)
            if (j != i)
                o.peer_positions[config_.agents[j].id] = observed(positions[j]);
        o.measurements = &m;
        o.replica_agent_index = i;
        o.delta = replicas_->delta();
        o.dt = dt;
    }

    std::vector<control::ControlOutput> outputs(controllers_.size());
    std::vector<std::size_t> idx(controllers_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t i) {
        outputs[i] = controllers_[i].control_tick(obs[i], options_.bypass_qp);
    });

    TickLog& log = last_;
    log.leader_pos = leader;
    const auto& nearest = m.nominal.minimum;
    if (!nearest.infinite) {
        log.min_distance = nearest.signed_distance();
        log.h_coll = log.min_distance - config_.controller.d_offset;
        log.obstacle_index = nearest.obstacle_index;
        log.object_witness = nearest.object_witness;
        log.obstacle_witness = nearest.obstacle_witness;
    }

    commands_.clear();
    for (std::size_t i = 0; i < controllers_.size(); ++i) {
        const auto& out = outputs[i];
        AgentTick a;
        a.id = config_.agents[i].id;
        a.position = positions[i];
        a.u_nom = out.diagnostics.u_nom;
        a.u = out.qp.u;
        a.status = out.qp.status;
        a.active_labels = out.qp.active_labels;
        a.solve_time = out.qp.solve_time;
        a.error = controllers_[i].state().p_r0 + leader - positions[i];
        a.error_norm = a.error.norm();
        a.h_coll = out.diagnostics.h_coll;
        a.dropped_collision_rows = out.diagnostics.dropped_collision_rows;
        log.agents.push_back(std::move(a));
        commands_[config_.agents[i].id] = out.qp.u;
    }

    std::vector<std::pair<AgentId, Vec3>> everyone{{config_.leader.id, leader}};
    for (std::size_t i = 0; i < positions.size(); ++i)
        everyone.emplace_back(config_.agents[i].id, positions[i]);
    for (std::size_t i = 0; i < everyone.size(); ++i) {
        for (std::size_t j = i + 1; j < everyone.size(); ++j) {
            PairTick p;
            p.first = everyone[i].first;
            p.second = everyone[j].first;
            p.distance = (everyone[j].second - everyone[i].second).norm();
            if (const auto lim = config_.controller.limits(p.first, p.second)) {
                p.h_stretch = control::pair_barrier(everyone[i].second, everyone[j].second, *lim,
                                                    control::PairKind::stretch);
                p.h_prox = control::pair_barrier(everyone[i].second, everyone[j].second, *lim,
                                                 control::PairKind::proximity);
            }
            log.pairs.push_back(std::move(p));
        }
    }
}

RunResult run(const ScenarioConfig& config, SimulationOptions options,
              const std::function<void(const TickLog&)>& on_tick)
{
    RunResult result;
    const auto t0 = Clock::now();
    const auto keep = [&](const TickLog& t) {
        result.ticks.push_back(t);
        if (on_tick)
            on_tick(t);
    };
    try {
        Simulation sim(config, options);
        keep(sim.last());
        while (!sim.finished())
            keep(sim.advance());
    } catch (const pbd::IntegrationDiverged& e) {
        spdlog::error("run aborted: {}", e.what());
        result.error = e.what();
    }
    result.wall_seconds = seconds_since(t0);
    return result;
}

}  // namespace pbdcbf::harness
