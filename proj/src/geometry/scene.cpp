#include "pbdcbf/geometry/scene.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pbdcbf::geometry {

std::array<int, 2> plane_axes(WorkingPlane plane)
{
    switch (plane) {
    case WorkingPlane::xy: return {0, 1};
    case WorkingPlane::yz: return {1, 2};
    case WorkingPlane::xz: return {0, 2};
    }
    return {1, 2};
}

int normal_axis(WorkingPlane plane)
{
    switch (plane) {
    case WorkingPlane::xy: return 2;
    case WorkingPlane::yz: return 0;
    case WorkingPlane::xz: return 1;
    }
    return 0;
}

WorkingPlane parse_plane(const std::string& name)
{
    if (name == "xy")
        return WorkingPlane::xy;
    if (name == "yz")
        return WorkingPlane::yz;
    if (name == "xz")
        return WorkingPlane::xz;
    throw std::invalid_argument("unknown working plane '" + name + "' (expected xy, yz or xz)");
}

std::string to_string(WorkingPlane plane)
{
    switch (plane) {
    case WorkingPlane::xy: return "xy";
    case WorkingPlane::yz: return "yz";
    case WorkingPlane::xz: return "xz";
    }
    return "yz";
}

namespace {

Vec3 embed(const Vec2& v) { return {v.x(), v.y(), 0.0}; }

struct PlanarFrame {
    std::array<int, 2> axes;

    Vec2 project(const Vec3& p) const { return {p[axes[0]], p[axes[1]]}; }

    // Lifts an in-plane point using the out-of-plane coordinate of `reference`.
    Vec3 lift(const Vec2& q, const Vec3& reference) const
    {
        Vec3 out = reference;
        out[axes[0]] = q.x();
        out[axes[1]] = q.y();
        return out;
    }
};

bool segments_cross_2d(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1)
{
    return segment_segment_distance(embed(a0), embed(a1), embed(b0), embed(b1)).distance <= 1e-12;
}

void validate_polygon(const PlanarObstacle& poly, std::ostringstream& err)
{
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    if (n < 3) {
        err << "polygon needs at least 3 vertices; ";
        return;
    }
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % n];
        area2 += p.x() * q.y() - q.x() * p.y();
    }
    if (!(area2 > 0.0))
        err << "polygon must be counter-clockwise with positive area; ";

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent)
                continue;
            if (segments_cross_2d(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
                err << "polygon edges " << i << " and " << j << " intersect; ";
                return;
            }
        }
    }
}

void validate_mesh(const MeshObstacle& mesh, std::ostringstream& err)
{
    if (mesh.faces.empty())
        err << "mesh has no faces; ";
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        if (face[0] >= mesh.vertices.size() || face[1] >= mesh.vertices.size() || face[2] >= mesh.vertices.size()) {
            err << "face " << f << " index out of range; ";
            continue;
        }
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3& b = mesh.vertices[face[1]];
        const Vec3& c = mesh.vertices[face[2]];
        if ((b - a).cross(c - a).norm() <= 1e-14)
            err << "face " << f << " is degenerate; ";
    }
}

DistanceResult planar_distance(const ObjectGeometry& object, const PlanarObstacle& poly)
{
    const PlanarFrame frame{plane_axes(poly.plane)};
    const auto& verts = poly.vertices;
    const std::size_t n = verts.size();

    std::vector<Vec2> pts(object.points.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        pts[i] = frame.project(object.points[i]);

    DistanceResult best;
    best.infinite = false;

    // Penetration: deepest object point inside the polygon.
    double deepest = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!point_in_polygon(pts[i], verts))
            continue;
        double depth = std::numeric_limits<double>::infinity();
        Vec2 foot = Vec2::Zero();
        for (std::size_t k = 0; k < n; ++k) {
            const PointSegmentResult r = point_segment_distance(embed(pts[i]), embed(verts[k]), embed(verts[(k + 1) % n]));
            if (r.distance < depth) {
                depth = r.distance;
                foot = r.witness.head<2>();
            }
        }
        if (depth > deepest) {
            deepest = depth;
            best.distance = depth > 0.0 ? -depth : 0.0;
            best.object_witness = object.points[i];
            best.obstacle_witness = frame.lift(foot, object.points[i]);
            best.object_element = i;
        }
    }
    if (deepest >= 0.0)
        return best;

    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const PointSegmentResult r = point_segment_distance(embed(pts[i]), embed(verts[k]), embed(verts[(k + 1) % n]));
            if (r.distance < best.distance) {
                best.distance = r.distance;
                best.object_witness = object.points[i];
                best.obstacle_witness = frame.lift(r.witness.head<2>(), object.points[i]);
                best.object_element = i;
            }
        }
    }
    for (std::size_t e = 0; e < object.edges.size(); ++e) {
        const auto [ia, ib] = object.edges[e];
        for (std::size_t k = 0; k < n; ++k) {
            const SegmentSegmentResult r =
                segment_segment_distance(embed(pts[ia]), embed(pts[ib]), embed(verts[k]), embed(verts[(k + 1) % n]));
            if (r.distance < best.distance) {
                best.distance = r.distance;
                const Vec3 on_object = object.points[ia] + r.s * (object.points[ib] - object.points[ia]);
                best.object_witness = on_object;
                best.obstacle_witness = frame.lift(r.witness_b.head<2>(), on_object);
                best.object_element = pts.size() + e;
            }
        }
    }
    return best;
}

// Outward face normals of a convex mesh, oriented away from the vertex centroid.
std::vector<Vec3> outward_normals(const MeshObstacle& mesh)
{
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : mesh.vertices)
        centroid += v;
    centroid /= static_cast<double>(mesh.vertices.size());
    std::vector<Vec3> normals;
    normals.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        Vec3 nrm = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).normalized();
        if (nrm.dot(centroid - a) > 0.0)
            nrm = -nrm;
        normals.push_back(nrm);
    }
    return normals;
}

DistanceResult mesh_distance(const ObjectGeometry& object, const MeshObstacle& mesh)
{
    DistanceResult best;
    best.infinite = false;

    const auto face_point = [&](std::size_t f, int k) -> const Vec3& { return mesh.vertices[mesh.faces[f][k]]; };

    if (mesh.convex) {
        const std::vector<Vec3> normals = outward_normals(mesh);
        double deepest = -1.0;
        for (std::size_t i = 0; i < object.points.size(); ++i) {
            const Vec3& p = object.points[i];
            bool inside = true;
            for (std::size_t f = 0; f < mesh.faces.size() && inside; ++f)
                inside = (p - face_point(f, 0)).dot(normals[f]) <= 0.0;
            if (!inside)
                continue;
            // Depth is the distance to the nearest face.
            double depth = std::numeric_limits<double>::infinity();
            Vec3 foot = Vec3::Zero();
            for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
                const PointTriangleResult r = point_triangle_distance(p, face_point(f, 0), face_point(f, 1), face_point(f, 2));
                if (r.distance < depth) {
                    depth = r.distance;
                    foot = r.witness;
                }
            }
            if (depth > deepest) {
                deepest = depth;
                best.distance = depth;
                best.obstacle_witness = foot;
                best.object_witness = p;
                best.object_element = i;
                best.inside = true;
            }
        }
        if (deepest >= 0.0)
            return best;
    }

    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < object.points.size(); ++i) {
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const PointTriangleResult r =
                point_triangle_distance(object.points[i], face_point(f, 0), face_point(f, 1), face_point(f, 2));
            if (r.distance < best.distance) {
                best.distance = r.distance;
                best.object_witness = object.points[i];
                best.obstacle_witness = r.witness;
                best.object_element = i;
            }
        }
    }
    for (std::size_t e = 0; e < object.edges.size(); ++e) {
        const Vec3& p0 = object.points[object.edges[e][0]];
        const Vec3& p1 = object.points[object.edges[e][1]];
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const SegmentTriangleResult r =
                segment_triangle_distance(p0, p1, face_point(f, 0), face_point(f, 1), face_point(f, 2));
            if (r.distance < best.distance) {
                best.distance = r.distance;
                best.object_witness = r.segment_witness;
                best.obstacle_witness = r.triangle_witness;
                best.object_element = object.points.size() + e;
            }
        }
    }
    return best;
}

}  // namespace

void validate(const Obstacle& obstacle)
{
    std::ostringstream err;
    if (const auto* poly = std::get_if<PlanarObstacle>(&obstacle))
        validate_polygon(*poly, err);
    else
        validate_mesh(std::get<MeshObstacle>(obstacle), err);
    const std::string msg = err.str();
    if (!msg.empty())
        throw std::invalid_argument("invalid obstacle: " + msg);
}

DistanceResult distance_to_obstacle(const ObjectGeometry& object, const Obstacle& obstacle)
{
    if (object.points.empty())
        throw std::invalid_argument("object geometry is empty");
    if (const auto* poly = std::get_if<PlanarObstacle>(&obstacle))
        return planar_distance(object, *poly);
    return mesh_distance(object, std::get<MeshObstacle>(obstacle));
}

SceneDistances scene_distances(const ObjectGeometry& object, std::span<const Obstacle> obstacles)
{
    SceneDistances out;
    out.per_obstacle.reserve(obstacles.size());
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
        DistanceResult r = distance_to_obstacle(object, obstacles[k]);
        r.obstacle_index = k;
        if (out.minimum.infinite || r.signed_distance() < out.minimum.signed_distance())
            out.minimum = r;
        out.per_obstacle.push_back(r);
    }
    return out;
}

}  // namespace pbdcbf::geometry
