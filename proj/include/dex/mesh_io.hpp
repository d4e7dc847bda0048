#pragma once

#include <filesystem>
#include <string>

#include "dex/geometry.hpp"

namespace dex {

/// Loads an STL (ASCII or binary) or OBJ mesh and applies `scale`. OBJ records
/// other than `v` and `f` are ignored; polygon faces are fan-triangulated. STL
/// vertices are welded on exact coordinate equality.
TriMesh load_mesh(const std::filesystem::path& path, double scale = 1.0);

void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace dex
