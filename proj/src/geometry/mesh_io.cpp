#include "pbdcbf/geometry/mesh_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pbdcbf::geometry {

MeshObstacle read_mesh(std::istream& in, const std::string& source_name)
{
    MeshObstacle mesh;
    std::string line;
    int line_no = 0;
    const auto fail = [&](const std::string& what) {
        throw std::runtime_error(source_name + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag))
            continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                fail("expected three coordinates after 'v'");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            long long idx[3];
            if (!(ls >> idx[0] >> idx[1] >> idx[2]))
                fail("expected three vertex indices after 'f'");
            std::array<std::size_t, 3> face{};
            for (int k = 0; k < 3; ++k) {
                if (idx[k] < 1 || idx[k] > static_cast<long long>(mesh.vertices.size()))
                    fail("face index " + std::to_string(idx[k]) + " out of range");
                face[k] = static_cast<std::size_t>(idx[k] - 1);
            }
            mesh.faces.push_back(face);
        } else {
            fail("unknown record '" + tag + "'");
        }
        std::string extra;
        if (ls >> extra)
            fail("unexpected trailing token '" + extra + "'");
    }
    validate(Obstacle{mesh});
    return mesh;
}

MeshObstacle load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file " + path.string());
    return read_mesh(in, path.string());
}

}  // namespace pbdcbf::geometry
