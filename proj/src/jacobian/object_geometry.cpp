#include "pbdcbf/jacobian/object_geometry.hpp"

namespace pbdcbf::jacobian {

geometry::ObjectGeometry extract_geometry(const pbd::WorldState& world)
{
    geometry::ObjectGeometry g;
    if (world.is_rod()) {
        const auto& segs = world.rod().segments;
        if (segs.empty())
            return g;
        g.points.reserve(segs.size() + 1);
        g.points.push_back(segs.front().end_point(-1.0));
        for (std::size_t i = 0; i + 1 < segs.size(); ++i)
            g.points.push_back(0.5 * (segs[i].end_point(1.0) + segs[i + 1].end_point(-1.0)));
        g.points.push_back(segs.back().end_point(1.0));
        for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
            g.edges.push_back({i, i + 1});
        return g;
    }
    const auto& cloth = world.cloth();
    g.points.reserve(cloth.particles.size());
    for (const auto& p : cloth.particles)
        g.points.push_back(p.position);
    g.edges.reserve(cloth.stretch_edges.size());
    for (const auto& e : cloth.stretch_edges)
        g.edges.push_back({e.i, e.j});
    return g;
}

}  // namespace pbdcbf::jacobian
