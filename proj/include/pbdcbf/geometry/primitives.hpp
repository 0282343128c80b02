#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace pbdcbf::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

class DegenerateTriangle : public std::invalid_argument {
public:
    DegenerateTriangle() : std::invalid_argument("degenerate (zero-area) triangle") {}
};

struct PointTriangleResult {
    double distance = 0.0;
    Vec3 witness = Vec3::Zero();  // closest point on the triangle
};

/// Exact distance from p to the closed triangle (a, b, c).
/// Throws DegenerateTriangle when the triangle has (near) zero area.
PointTriangleResult point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct SegmentSegmentResult {
    double distance = 0.0;
    Vec3 witness_a = Vec3::Zero();
    Vec3 witness_b = Vec3::Zero();
    double s = 0.0;  // parameter on a0-a1
    double t = 0.0;  // parameter on b0-b1
};

/// Exact distance between closed segments; zero-length segments act as points.
SegmentSegmentResult segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

struct PointSegmentResult {
    double distance = 0.0;
    Vec3 witness = Vec3::Zero();
    double t = 0.0;
};

PointSegmentResult point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

struct SegmentTriangleResult {
    double distance = 0.0;
    Vec3 segment_witness = Vec3::Zero();
    Vec3 triangle_witness = Vec3::Zero();
};

SegmentTriangleResult segment_triangle_distance(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                                const Vec3& c);

/// Even-odd membership; points on the boundary count as inside.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon);

}  // namespace pbdcbf::geometry
