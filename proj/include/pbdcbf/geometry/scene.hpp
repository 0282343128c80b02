#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pbdcbf/geometry/primitives.hpp"

namespace pbdcbf::geometry {

/// Axis-aligned working plane for planar scenes; the two in-plane world axes.
enum class WorkingPlane { xy, yz, xz };

std::array<int, 2> plane_axes(WorkingPlane plane);
int normal_axis(WorkingPlane plane);
WorkingPlane parse_plane(const std::string& name);
std::string to_string(WorkingPlane plane);

/// Simple polygon, counter-clockwise, in a working plane.
struct PlanarObstacle {
    WorkingPlane plane = WorkingPlane::yz;
    std::vector<Vec2> vertices;
};

struct MeshObstacle {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
    bool convex = false;
};

using Obstacle = std::variant<PlanarObstacle, MeshObstacle>;

/// Throws std::invalid_argument on invalid obstacle geometry (too few vertices,
/// self-intersecting polygon, bad face index, degenerate face).
void validate(const Obstacle& obstacle);

/// Object as points plus edges between them (rod polyline or cloth particles/edges).
/// Element indices: points are [0, P), edges are [P, P + E).
struct ObjectGeometry {
    std::vector<Vec3> points;
    std::vector<std::array<std::size_t, 2>> edges;
};

struct DistanceResult {
    /// Planar obstacles: signed, negative is penetration depth.
    /// Mesh obstacles: unsigned; `inside` is set for convex meshes containing an object point.
    double distance = std::numeric_limits<double>::infinity();
    Vec3 object_witness = Vec3::Zero();
    Vec3 obstacle_witness = Vec3::Zero();
    std::size_t object_element = 0;
    std::size_t obstacle_index = 0;
    bool inside = false;
    bool infinite = true;  // no obstacle in the scene

    /// Distance with penetration as a negative value for both obstacle kinds.
    double signed_distance() const { return inside && distance > 0.0 ? -distance : distance; }
};

DistanceResult distance_to_obstacle(const ObjectGeometry& object, const Obstacle& obstacle);

struct SceneDistances {
    DistanceResult minimum;
    std::vector<DistanceResult> per_obstacle;
};

/// Global minimum over all (object element, obstacle element) pairs, compared on
/// signed distance; ties resolve to the lowest obstacle, then lowest element index.
SceneDistances scene_distances(const ObjectGeometry& object, std::span<const Obstacle> obstacles);

inline DistanceResult min_distance_to_scene(const ObjectGeometry& object, std::span<const Obstacle> obstacles)
{
    return scene_distances(object, obstacles).minimum;
}

}  // namespace pbdcbf::geometry
