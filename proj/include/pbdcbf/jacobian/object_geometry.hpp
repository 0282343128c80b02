#pragma once

#include "pbdcbf/geometry/scene.hpp"
#include "pbdcbf/pbd/world.hpp"

namespace pbdcbf::jacobian {

/// Rod: polyline through the segment joints (joint = midpoint of the two adjoining
/// segment ends) plus both free ends. Cloth: particle positions and stretch edges.
geometry::ObjectGeometry extract_geometry(const pbd::WorldState& world);

}  // namespace pbdcbf::jacobian
