#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace pbdcbf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Agents are identified by name ("leader", "a1", ...).
using AgentId = std::string;

}  // namespace pbdcbf

namespace pbdcbf::pbd {

struct Particle {
    Vec3 position = Vec3::Zero();
    Vec3 previous_position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double inverse_mass = 1.0;  // 0 marks a kinematically driven particle
};

/// Rigid rod segment. The segment axis is the third body axis (local z).
struct RigidSegment {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Vec3 previous_position = Vec3::Zero();
    Quat previous_orientation = Quat::Identity();
    Vec3 velocity = Vec3::Zero();
    Vec3 angular_velocity = Vec3::Zero();  // world frame
    double inverse_mass = 1.0;
    Vec3 inverse_inertia = Vec3::Ones();  // body-frame diagonal
    double rest_length = 0.0;

    Mat3 world_inverse_inertia() const;
    /// Joint point at the +z end (sign = +1) or the -z end (sign = -1).
    Vec3 end_point(double sign) const;
};

struct RodMaterial {
    double youngs_modulus = 1.0e6;  // Pa
    double torsion_modulus = 1.0e6; // Pa
    double zero_stretch_stiffness = 1.0;  // PBD stiffness in (0, 1]; 1 is inextensible
};

/// Zero-stretch / bending / twisting coupling between segments first and first+1.
struct SbtConstraint {
    std::size_t first = 0;
    std::size_t second = 1;
    Quat rest_darboux = Quat::Identity();
};

struct RodObject {
    std::vector<RigidSegment> segments;
    std::vector<SbtConstraint> sbt_constraints;
    RodMaterial material;
    double radius = 0.005;  // m, cross-section used for bending/torsion stiffness
};

struct StretchEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double rest_length = 0.0;
};

struct BendingPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double rest_distance = 0.0;
};

struct ClothObject {
    std::vector<Particle> particles;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<StretchEdge> stretch_edges;
    std::vector<BendingPair> bending_pairs;
    double stretching_compliance = 0.0;  // m/N
    double bending_compliance = 0.0;     // m/N
};

struct Attachment {
    AgentId agent_id;
    std::size_t body_index = 0;
    Vec3 target_position = Vec3::Zero();
    // Interpolation start for the current step; the held body moves from here to target.
    Vec3 step_start = Vec3::Zero();
    double released_inverse_mass = 1.0;
};

struct SubstepConfig {
    double dt = 0.02;
    int num_substeps = 20;
    int num_steps = 1;

    double substep() const { return dt / num_substeps; }
};

using DeformableObject = std::variant<RodObject, ClothObject>;

/// Complete simulation state. Copying a WorldState yields an independent replica.
struct WorldState {
    DeformableObject object;
    std::vector<Attachment> attachments;
    Vec3 gravity{0.0, 0.0, -9.81};
    double damping_coefficient = 0.0;  // 1/s
    SubstepConfig substeps;
    int solver_iterations = 1;

    bool is_rod() const { return std::holds_alternative<RodObject>(object); }
    bool is_cloth() const { return std::holds_alternative<ClothObject>(object); }
    const RodObject& rod() const { return std::get<RodObject>(object); }
    RodObject& rod() { return std::get<RodObject>(object); }
    const ClothObject& cloth() const { return std::get<ClothObject>(object); }
    ClothObject& cloth() { return std::get<ClothObject>(object); }

    std::size_t body_count() const;
    Vec3 body_position(std::size_t index) const;
    double body_inverse_mass(std::size_t index) const;

    const Attachment* find_attachment(const AgentId& agent) const;
    Attachment* find_attachment(const AgentId& agent);
};

class IntegrationDiverged : public std::runtime_error {
public:
    IntegrationDiverged(std::size_t body, const std::string& what)
        : std::runtime_error(what), body_index(body) {}
    std::size_t body_index;
};

class UnknownAgent : public std::invalid_argument {
public:
    explicit UnknownAgent(const AgentId& agent)
        : std::invalid_argument("no attachment for agent '" + agent + "'"), agent_id(agent) {}
    AgentId agent_id;
};

/// Checks structural invariants; throws std::invalid_argument listing the first failure.
void validate(const WorldState& world);

/// Pins `body_index` to the agent. The body becomes kinematic (inverse mass 0).
void attach(WorldState& world, const AgentId& agent, std::size_t body_index);
void detach(WorldState& world, const AgentId& agent);

/// Takes effect on the next step; the held body reaches `target` at the end of it.
void set_attachment_target(WorldState& world, const AgentId& agent, const Vec3& target);

inline WorldState clone_world(const WorldState& world) { return world; }

}  // namespace pbdcbf::pbd
