#include "pbdcbf/pbd/builders.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace pbdcbf::pbd {

RodObject make_rod(const RodSpec& spec)
{
    if (spec.segment_count < 1)
        throw std::invalid_argument("rod needs at least one segment");
    if (!(spec.length > 0.0) || !(spec.radius > 0.0) || !(spec.linear_density > 0.0))
        throw std::invalid_argument("rod length, radius and density must be positive");
    if (spec.direction.norm() < 1e-12)
        throw std::invalid_argument("rod direction must be non-zero");

    const Vec3 dir = spec.direction.normalized();
    const double l = spec.length / spec.segment_count;
    const double mass = spec.linear_density * l;
    const double r2 = spec.radius * spec.radius;
    // Solid cylinder about its center; z is the segment axis.
    const double i_perp = mass * (3.0 * r2 + l * l) / 12.0;
    const double i_axis = 0.5 * mass * r2;
    const Quat q = Quat::FromTwoVectors(Vec3::UnitZ(), dir).normalized();

    RodObject rod;
    rod.material = spec.material;
    rod.radius = spec.radius;
    rod.segments.reserve(spec.segment_count);
    for (int i = 0; i < spec.segment_count; ++i) {
        RigidSegment s;
        s.position = spec.start + (i + 0.5) * l * dir;
        s.previous_position = s.position;
        s.orientation = q;
        s.previous_orientation = q;
        s.inverse_mass = 1.0 / mass;
        s.inverse_inertia = Vec3(1.0 / i_perp, 1.0 / i_perp, 1.0 / i_axis);
        s.rest_length = l;
        rod.segments.push_back(s);
    }
    for (int i = 0; i + 1 < spec.segment_count; ++i) {
        const auto& a = rod.segments[i];
        const auto& b = rod.segments[i + 1];
        rod.sbt_constraints.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1),
                                       (a.orientation.conjugate() * b.orientation).normalized()});
    }
    return rod;
}

void build_cloth_topology(ClothObject& cloth)
{
    struct EdgeUse {
        std::size_t order;
        std::vector<std::size_t> opposite;
    };
    std::map<std::pair<std::size_t, std::size_t>, EdgeUse> edges;
    std::size_t next = 0;
    for (const auto& tri : cloth.triangles) {
        for (int k = 0; k < 3; ++k) {
            std::size_t a = tri[k];
            std::size_t b = tri[(k + 1) % 3];
            if (a > b)
                std::swap(a, b);
            auto [it, inserted] = edges.try_emplace({a, b}, EdgeUse{next, {}});
            if (inserted)
                ++next;
            it->second.opposite.push_back(tri[(k + 2) % 3]);
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> ordered(edges.size());
    for (const auto& [key, use] : edges)
        ordered[use.order] = key;

    const auto dist = [&](std::size_t i, std::size_t j) {
        return (cloth.particles[i].position - cloth.particles[j].position).norm();
    };

    cloth.stretch_edges.clear();
    cloth.bending_pairs.clear();
    for (const auto& [a, b] : ordered) {
        cloth.stretch_edges.push_back({a, b, dist(a, b)});
        const auto& opp = edges.at({a, b}).opposite;
        if (opp.size() == 2)
            cloth.bending_pairs.push_back({opp[0], opp[1], dist(opp[0], opp[1])});
    }
}

ClothObject make_cloth(const ClothSpec& spec)
{
    if (spec.resolution < 2)
        throw std::invalid_argument("cloth resolution must be >= 2");
    if (!(spec.size_u > 0.0) || !(spec.size_v > 0.0) || !(spec.areal_density > 0.0))
        throw std::invalid_argument("cloth size and density must be positive");

    const int n = spec.resolution;
    const Vec3 du = spec.axis_u.normalized() * (spec.size_u / (n - 1));
    const Vec3 dv = spec.axis_v.normalized() * (spec.size_v / (n - 1));
    const double particle_mass = spec.areal_density * spec.size_u * spec.size_v / (n * n);

    ClothObject cloth;
    cloth.stretching_compliance = spec.stretching_compliance;
    cloth.bending_compliance = spec.bending_compliance;
    cloth.particles.reserve(static_cast<std::size_t>(n) * n);
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            Particle p;
            p.position = spec.origin + col * du + row * dv;
            p.previous_position = p.position;
            p.inverse_mass = 1.0 / particle_mass;
            cloth.particles.push_back(p);
        }
    }
    for (int row = 0; row + 1 < n; ++row) {
        for (int col = 0; col + 1 < n; ++col) {
            const std::size_t a = row * n + col;
            const std::size_t b = a + 1;
            const std::size_t c = a + n;
            const std::size_t d = c + 1;
            cloth.triangles.push_back({a, b, d});
            cloth.triangles.push_back({a, d, c});
        }
    }
    build_cloth_topology(cloth);
    return cloth;
}

}  // namespace pbdcbf::pbd
