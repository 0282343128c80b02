#pragma once

#include <filesystem>
#include <istream>

#include "pbdcbf/geometry/scene.hpp"

namespace pbdcbf::geometry {

/// Text triangle mesh: "v x y z" vertex lines, "f i j k" face lines with 1-based
/// indices, '#' comments and blank lines ignored. Errors carry the line number.
MeshObstacle read_mesh(std::istream& in, const std::string& source_name = "<stream>");
MeshObstacle load_mesh(const std::filesystem::path& path);

}  // namespace pbdcbf::geometry
