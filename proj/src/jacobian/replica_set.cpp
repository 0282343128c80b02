#include "pbdcbf/jacobian/replica_set.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <execution>
#include <numeric>
#include <stdexcept>

#include "pbdcbf/jacobian/object_geometry.hpp"
#include "pbdcbf/pbd/solver.hpp"

namespace pbdcbf::jacobian {

namespace {

constexpr const char* kAxisNames[3] = {"x", "y", "z"};

template <typename Fn>
void for_each_index(bool parallel, std::size_t n, Fn&& fn)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (parallel)
        std::for_each(std::execution::par, idx.begin(), idx.end(), fn);
    else
        std::for_each(idx.begin(), idx.end(), fn);
}

}  // namespace

ReplicaSet::ReplicaSet(const pbd::WorldState& world, std::vector<AgentId> perturbed_agents, ReplicaOptions options)
    : options_(options), agents_(std::move(perturbed_agents)), nominal_(world)
{
    if (!(options_.delta > 0.0) && !(options_.allow_zero_delta && options_.delta == 0.0))
        throw std::invalid_argument("perturbation delta must be positive");
    if (options_.resync_interval < 0)
        throw std::invalid_argument("resync interval must be non-negative");
    for (const auto& a : agents_)
        if (!nominal_.find_attachment(a))
            throw pbd::UnknownAgent(a);
    perturbed_.assign(3 * agents_.size(), nominal_);
    apply_offsets();
    step_seconds_.assign(world_count(), 0.0);
}

std::size_t ReplicaSet::agent_index(const AgentId& agent) const
{
    const auto it = std::find(agents_.begin(), agents_.end(), agent);
    if (it == agents_.end())
        throw pbd::UnknownAgent(agent);
    return static_cast<std::size_t>(it - agents_.begin());
}

const pbd::WorldState& ReplicaSet::perturbed(const AgentId& agent, int axis) const
{
    if (axis < 0 || axis > 2)
        throw std::out_of_range("axis must be 0, 1 or 2");
    return perturbed_[3 * agent_index(agent) + static_cast<std::size_t>(axis)];
}

Vec3 ReplicaSet::target(const AgentId& agent) const
{
    const pbd::Attachment* att = nominal_.find_attachment(agent);
    if (!att)
        throw pbd::UnknownAgent(agent);
    return att->target_position;
}

void ReplicaSet::set_target(const AgentId& agent, const Vec3& target)
{
    pbd::set_attachment_target(nominal_, agent, target);
}

void ReplicaSet::apply_offsets()
{
    for (std::size_t a = 0; a < agents_.size(); ++a) {
        for (int axis = 0; axis < 3; ++axis) {
            pbd::WorldState& w = perturbed_[3 * a + static_cast<std::size_t>(axis)];
            for (const auto& att : nominal_.attachments) {
                Vec3 t = att.target_position;
                if (att.agent_id == agents_[a])
                    t[axis] += options_.delta;
                pbd::set_attachment_target(w, att.agent_id, t);
            }
        }
    }
}

void ReplicaSet::resync()
{
    for (auto& w : perturbed_)
        w = nominal_;
    apply_offsets();
}

std::string ReplicaSet::replica_name(std::size_t world_index) const
{
    if (world_index == 0)
        return "nominal";
    const std::size_t k = world_index - 1;
    return agents_[k / 3] + "/" + kAxisNames[k % 3];
}

void ReplicaSet::tick(const std::map<AgentId, Vec3>& velocity_commands)
{
    const double dt = nominal_.substeps.dt * nominal_.substeps.num_steps;
    for (const auto& [agent, u] : velocity_commands)
        set_target(agent, target(agent) + dt * u);
    step();
}

void ReplicaSet::step()
{
    if (options_.resync_interval > 0 && ticks_ > 0 && ticks_ % static_cast<std::size_t>(options_.resync_interval) == 0)
        resync();
    else
        apply_offsets();

    std::vector<std::exception_ptr> errors(world_count());
    for_each_index(options_.parallel, world_count(), [&](std::size_t i) {
        pbd::WorldState& w = i == 0 ? nominal_ : perturbed_[i - 1];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            pbd::step(w);
        } catch (...) {
            errors[i] = std::current_exception();
        }
        step_seconds_[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    ++ticks_;

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i])
            continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const pbd::IntegrationDiverged& e) {
            throw ReplicaDiverged(replica_name(i), e);
        }
    }
}

ReplicaMeasurements ReplicaSet::measure(std::span<const geometry::Obstacle> obstacles) const
{
    ReplicaMeasurements m;
    m.perturbed.resize(perturbed_.size());
    std::vector<std::exception_ptr> errors(world_count());
    for_each_index(options_.parallel, world_count(), [&](std::size_t i) {
        try {
            if (i == 0)
                m.nominal = geometry::scene_distances(extract_geometry(nominal_), obstacles);
            else
                m.perturbed[i - 1] = geometry::scene_distances(extract_geometry(perturbed_[i - 1]), obstacles);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return m;
}

JacobianRow jacobian_row(const ReplicaMeasurements& m, std::size_t agent_index, double delta, double eps_j,
                         std::optional<std::size_t> obstacle)
{
    JacobianRow row;
    if (m.nominal.minimum.infinite || !(delta > 0.0))
        return row;
    const auto pick = [&](const geometry::SceneDistances& sd) -> const geometry::DistanceResult& {
        return obstacle ? sd.per_obstacle.at(*obstacle) : sd.minimum;
    };
    const double f0 = pick(m.nominal).signed_distance();
    for (int axis = 0; axis < 3; ++axis) {
        const auto& sd = m.perturbed.at(3 * agent_index + static_cast<std::size_t>(axis));
        row.J[axis] = (pick(sd).signed_distance() - f0) / delta;
    }
    row.valid = row.J.allFinite() && row.J.norm() >= eps_j;
    if (!row.J.allFinite())
        row.J.setZero();
    return row;
}

}  // namespace pbdcbf::jacobian
