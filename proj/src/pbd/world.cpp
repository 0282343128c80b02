#include "pbdcbf/pbd/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pbdcbf::pbd {

Mat3 RigidSegment::world_inverse_inertia() const
{
    const Mat3 R = orientation.toRotationMatrix();
    return R * inverse_inertia.asDiagonal() * R.transpose();
}

Vec3 RigidSegment::end_point(double sign) const
{
    return position + orientation * Vec3(0.0, 0.0, sign * 0.5 * rest_length);
}

std::size_t WorldState::body_count() const
{
    return std::visit([](const auto& obj) -> std::size_t {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, RodObject>)
            return obj.segments.size();
        else
            return obj.particles.size();
    }, object);
}

Vec3 WorldState::body_position(std::size_t index) const
{
    if (index >= body_count())
        throw std::out_of_range("body index out of range");
    if (is_rod())
        return rod().segments[index].position;
    return cloth().particles[index].position;
}

double WorldState::body_inverse_mass(std::size_t index) const
{
    if (index >= body_count())
        throw std::out_of_range("body index out of range");
    if (is_rod())
        return rod().segments[index].inverse_mass;
    return cloth().particles[index].inverse_mass;
}

const Attachment* WorldState::find_attachment(const AgentId& agent) const
{
    auto it = std::find_if(attachments.begin(), attachments.end(),
                           [&](const Attachment& a) { return a.agent_id == agent; });
    return it == attachments.end() ? nullptr : &*it;
}

Attachment* WorldState::find_attachment(const AgentId& agent)
{
    return const_cast<Attachment*>(std::as_const(*this).find_attachment(agent));
}

namespace {

double& inverse_mass_ref(WorldState& world, std::size_t index)
{
    if (world.is_rod())
        return world.rod().segments.at(index).inverse_mass;
    return world.cloth().particles.at(index).inverse_mass;
}

}  // namespace

void validate(const WorldState& world)
{
    std::ostringstream err;
    if (!(world.substeps.dt > 0.0))
        err << "dt must be positive; ";
    if (world.substeps.num_substeps < 1)
        err << "num_substeps must be >= 1; ";
    if (world.substeps.num_steps < 1)
        err << "num_steps must be >= 1; ";
    if (world.solver_iterations < 1)
        err << "solver_iterations must be >= 1; ";
    if (world.damping_coefficient < 0.0)
        err << "damping_coefficient must be >= 0; ";

    if (world.is_rod()) {
        const auto& rod = world.rod();
        if (rod.segments.empty())
            err << "rod has no segments; ";
        if (!rod.segments.empty() && rod.sbt_constraints.size() != rod.segments.size() - 1)
            err << "rod needs exactly N-1 stretch-bending-twisting constraints; ";
        for (const auto& c : rod.sbt_constraints) {
            if (c.first >= rod.segments.size() || c.second >= rod.segments.size())
                err << "constraint references missing segment; ";
            if (std::abs(c.rest_darboux.norm() - 1.0) > 1e-9)
                err << "rest Darboux quaternion is not unit; ";
        }
        if (!(rod.material.zero_stretch_stiffness > 0.0 && rod.material.zero_stretch_stiffness <= 1.0))
            err << "zero_stretch_stiffness must be in (0, 1]; ";
    } else {
        const auto& cloth = world.cloth();
        for (const auto& e : cloth.stretch_edges)
            if (!(e.rest_length > 0.0) || e.i >= cloth.particles.size() || e.j >= cloth.particles.size())
                err << "invalid stretch edge " << e.i << "-" << e.j << "; ";
        if (cloth.stretching_compliance < 0.0 || cloth.bending_compliance < 0.0)
            err << "compliances must be >= 0; ";
    }

    for (std::size_t a = 0; a < world.attachments.size(); ++a) {
        const auto& att = world.attachments[a];
        if (att.body_index >= world.body_count())
            err << "attachment of '" << att.agent_id << "' references missing body; ";
        else if (world.body_inverse_mass(att.body_index) != 0.0)
            err << "attached body " << att.body_index << " is not kinematic; ";
        for (std::size_t b = a + 1; b < world.attachments.size(); ++b) {
            if (world.attachments[b].agent_id == att.agent_id)
                err << "agent '" << att.agent_id << "' attached twice; ";
            if (world.attachments[b].body_index == att.body_index)
                err << "body " << att.body_index << " held by two agents; ";
        }
    }

    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("invalid world: " + msg);
}

void attach(WorldState& world, const AgentId& agent, std::size_t body_index)
{
    if (body_index >= world.body_count())
        throw std::out_of_range("attachment body index out of range");
    if (world.find_attachment(agent))
        throw std::invalid_argument("agent '" + agent + "' already attached");
    for (const auto& a : world.attachments)
        if (a.body_index == body_index)
            throw std::invalid_argument("body already held by agent '" + a.agent_id + "'");

    double& w = inverse_mass_ref(world, body_index);
    Attachment att;
    att.agent_id = agent;
    att.body_index = body_index;
    att.target_position = world.body_position(body_index);
    att.step_start = att.target_position;
    att.released_inverse_mass = w;
    w = 0.0;
    world.attachments.push_back(std::move(att));
}

void detach(WorldState& world, const AgentId& agent)
{
    auto it = std::find_if(world.attachments.begin(), world.attachments.end(),
                           [&](const Attachment& a) { return a.agent_id == agent; });
    if (it == world.attachments.end())
        throw UnknownAgent(agent);
    inverse_mass_ref(world, it->body_index) = it->released_inverse_mass;
    world.attachments.erase(it);
}

void set_attachment_target(WorldState& world, const AgentId& agent, const Vec3& target)
{
    Attachment* att = world.find_attachment(agent);
    if (!att)
        throw UnknownAgent(agent);
    att->target_position = target;
}

}  // namespace pbdcbf::pbd
