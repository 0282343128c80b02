#pragma once

#include "pbdcbf/pbd/world.hpp"

namespace pbdcbf::pbd {

/// Straight rod laid out from `start` along `direction`.
struct RodSpec {
    double length = 1.0;
    int segment_count = 28;
    Vec3 start = Vec3::Zero();
    Vec3 direction = Vec3::UnitY();
    double radius = 0.005;          // m
    double linear_density = 1.0;    // kg/m
    RodMaterial material;
};

/// Flat rectangular sheet: `resolution` x `resolution` particles spanning
/// size_u along axis_u and size_v along axis_v, starting at `origin`.
/// Particle index = row * resolution + column, rows advance along axis_v.
struct ClothSpec {
    double size_u = 1.0;
    double size_v = 1.0;
    int resolution = 15;
    Vec3 origin = Vec3::Zero();
    Vec3 axis_u = Vec3::UnitX();
    Vec3 axis_v = Vec3::UnitY();
    double areal_density = 0.1;  // kg/m^2
    double stretching_compliance = 0.0;
    double bending_compliance = 1.0e-4;
};

RodObject make_rod(const RodSpec& spec);
ClothObject make_cloth(const ClothSpec& spec);

/// Builds stretch edges and opposite-vertex bending pairs from a triangle list.
void build_cloth_topology(ClothObject& cloth);

}  // namespace pbdcbf::pbd
