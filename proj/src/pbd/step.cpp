#include "pbdcbf/pbd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

namespace pbdcbf::pbd {

namespace {

// Position of the held body at substep fraction f of the current step.
Vec3 kinematic_position(const Attachment& att, double f)
{
    return (1.0 - f) * att.step_start + f * att.target_position;
}

void predict(ClothObject& cloth, const WorldState& world, double h, double f)
{
    for (auto& p : cloth.particles) {
        p.previous_position = p.position;
        if (p.inverse_mass > 0.0) {
            p.velocity += h * world.gravity;
            p.position += h * p.velocity;
        }
    }
    for (const auto& att : world.attachments)
        cloth.particles[att.body_index].position = kinematic_position(att, f);
}

void predict(RodObject& rod, const WorldState& world, double h, double f)
{
    for (auto& s : rod.segments) {
        s.previous_position = s.position;
        if (s.inverse_mass > 0.0) {
            s.velocity += h * world.gravity;
            s.position += h * s.velocity;
        }

        s.previous_orientation = s.orientation;
        // Gyroscopic term in the body frame; no external torque.
        const Mat3 R = s.orientation.toRotationMatrix();
        Vec3 w_body = R.transpose() * s.angular_velocity;
        const Vec3 inertia = s.inverse_inertia.cwiseInverse();
        const Vec3 torque = -w_body.cross(inertia.cwiseProduct(w_body));
        w_body += h * s.inverse_inertia.cwiseProduct(torque);
        s.angular_velocity = R * w_body;

        const Quat wq(0.0, s.angular_velocity.x(), s.angular_velocity.y(), s.angular_velocity.z());
        s.orientation.coeffs() += 0.5 * h * (wq * s.orientation).coeffs();
        s.orientation.normalize();
    }
    for (const auto& att : world.attachments)
        rod.segments[att.body_index].position = kinematic_position(att, f);
}

void update_velocities(ClothObject& cloth, double h)
{
    for (auto& p : cloth.particles)
        p.velocity = (p.position - p.previous_position) / h;
}

void update_velocities(RodObject& rod, double h)
{
    for (auto& s : rod.segments) {
        s.velocity = (s.position - s.previous_position) / h;
        const Quat dq = s.orientation * s.previous_orientation.conjugate();
        s.angular_velocity = 2.0 * dq.vec() / h;
        if (dq.w() < 0.0)
            s.angular_velocity = -s.angular_velocity;
    }
}

void check_finite(const WorldState& world)
{
    if (world.is_rod()) {
        const auto& segs = world.rod().segments;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto& s = segs[i];
            if (!s.position.allFinite() || !s.velocity.allFinite() || !s.orientation.coeffs().allFinite() ||
                !s.angular_velocity.allFinite())
                throw IntegrationDiverged(i, "rod segment " + std::to_string(i) + " diverged");
        }
    } else {
        const auto& ps = world.cloth().particles;
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (!ps[i].position.allFinite() || !ps[i].velocity.allFinite())
                throw IntegrationDiverged(i, "cloth particle " + std::to_string(i) + " diverged");
    }
}

}  // namespace

void apply_damping(WorldState& world, double h)
{
    const double scale = 1.0 - std::clamp(world.damping_coefficient * h, 0.0, 1.0);
    if (scale == 1.0)
        return;
    if (world.is_rod()) {
        for (auto& s : world.rod().segments) {
            s.velocity *= scale;
            s.angular_velocity *= scale;
        }
    } else {
        for (auto& p : world.cloth().particles)
            p.velocity *= scale;
    }
}

SolveReport step(WorldState& world)
{
    SolveReport report;
    const int substeps = world.substeps.num_substeps;
    const double h = world.substeps.substep();
    if (!(h > 0.0))
        throw std::invalid_argument("substep size must be positive");

    std::vector<double> lambdas_a;
    std::vector<double> lambdas_b;

    for (auto& att : world.attachments)
        att.step_start = world.body_position(att.body_index);
    const int total = world.substeps.num_steps * substeps;

    for (int st = 0; st < world.substeps.num_steps; ++st) {
        for (int sub = 0; sub < substeps; ++sub) {
            const double f = static_cast<double>(st * substeps + sub + 1) / total;
            if (world.is_rod()) {
                RodObject& rod = world.rod();
                predict(rod, world, h, f);
                lambdas_a.assign(6 * rod.sbt_constraints.size(), 0.0);
                for (int it = 0; it < world.solver_iterations; ++it)
                    report += solve_sbt(rod, h, lambdas_a);
                update_velocities(rod, h);
            } else {
                ClothObject& cloth = world.cloth();
                predict(cloth, world, h, f);
                lambdas_a.assign(cloth.stretch_edges.size(), 0.0);
                lambdas_b.assign(cloth.bending_pairs.size(), 0.0);
                for (int it = 0; it < world.solver_iterations; ++it) {
                    report += solve_stretch(cloth, h, lambdas_a);
                    report += solve_bending(cloth, h, lambdas_b);
                }
                update_velocities(cloth, h);
            }
            apply_damping(world, h);
            check_finite(world);
        }
    }
    return report;
}

}  // namespace pbdcbf::pbd
