#include "pbdcbf/geometry/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pbdcbf::geometry {

namespace {

constexpr double kBoundaryTolerance = 1e-12;

}  // namespace

// Voronoi-region walk (Ericson, Real-Time Collision Detection, 5.1.5).
PointTriangleResult point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const double scale = std::max({ab.squaredNorm(), ac.squaredNorm(), (c - b).squaredNorm()});
    if (!(ab.cross(ac).norm() > 1e-12 * scale) || scale == 0.0)
        throw DegenerateTriangle();

    const auto result = [&](const Vec3& q) { return PointTriangleResult{(p - q).norm(), q}; };

    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0)
        return result(a);

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3)
        return result(b);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        return result(a + (d1 / (d1 - d3)) * ab);

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6)
        return result(c);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        return result(a + (d2 / (d2 - d6)) * ac);

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return result(b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b));

    const double denom = 1.0 / (va + vb + vc);
    return result(a + ab * (vb * denom) + ac * (vc * denom));
}

PointSegmentResult point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    const Vec3 q = a + t * ab;
    return {(p - q).norm(), q, t};
}

// Closest points of two segments (Ericson 5.1.9), degenerate segments as points.
SegmentSegmentResult segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1)
{
    constexpr double eps = 1e-30;
    const Vec3 d1 = a1 - a0;
    const Vec3 d2 = b1 - b0;
    const Vec3 r = a0 - b0;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);

    double s = 0.0;
    double t = 0.0;
    if (a <= eps && e <= eps) {
        s = t = 0.0;
    } else if (a <= eps) {
        s = 0.0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }

    SegmentSegmentResult out;
    out.s = s;
    out.t = t;
    out.witness_a = a0 + s * d1;
    out.witness_b = b0 + t * d2;
    out.distance = (out.witness_a - out.witness_b).norm();
    return out;
}

SegmentTriangleResult segment_triangle_distance(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                                const Vec3& c)
{
    // Proper crossing of the triangle interior gives zero distance.
    const Vec3 dir = p1 - p0;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) > 1e-14 * e1.norm() * e2.norm() * std::max(dir.norm(), 1e-300)) {
        const double inv = 1.0 / det;
        const Vec3 tvec = p0 - a;
        const double u = tvec.dot(pvec) * inv;
        const Vec3 qvec = tvec.cross(e1);
        const double v = dir.dot(qvec) * inv;
        const double t = e2.dot(qvec) * inv;
        if (u >= 0.0 && v >= 0.0 && u + v <= 1.0 && t >= 0.0 && t <= 1.0) {
            const Vec3 hit = p0 + t * dir;
            return {0.0, hit, hit};
        }
    }

    SegmentTriangleResult best;
    best.distance = std::numeric_limits<double>::infinity();
    const auto consider = [&](double d, const Vec3& on_segment, const Vec3& on_triangle) {
        if (d < best.distance)
            best = {d, on_segment, on_triangle};
    };
    const PointTriangleResult r0 = point_triangle_distance(p0, a, b, c);
    consider(r0.distance, p0, r0.witness);
    const PointTriangleResult r1 = point_triangle_distance(p1, a, b, c);
    consider(r1.distance, p1, r1.witness);
    const Vec3* tri[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
        const SegmentSegmentResult ss = segment_segment_distance(p0, p1, *tri[k], *tri[(k + 1) % 3]);
        consider(ss.distance, ss.witness_a, ss.witness_b);
    }
    return best;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon)
{
    const std::size_t n = polygon.size();
    if (n < 3)
        return false;

    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& vi = polygon[i];
        const Vec2& vj = polygon[j];

        // Boundary check.
        const Vec2 e = vi - vj;
        const double len2 = e.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((p - vj).dot(e) / len2, 0.0, 1.0) : 0.0;
        if ((vj + t * e - p).norm() <= kBoundaryTolerance)
            return true;

        if ((vi.y() > p.y()) != (vj.y() > p.y())) {
            const double x_cross = vj.x() + (p.y() - vj.y()) * (vi.x() - vj.x()) / (vi.y() - vj.y());
            if (p.x() < x_cross)
                inside = !inside;
        }
    }
    return inside;
}

}  // namespace pbdcbf::geometry
