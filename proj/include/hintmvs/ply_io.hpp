#pragma once

#include <string>

#include "hintmvs/geometry.hpp"

namespace hintmvs {

// Binary little-endian PLY with float x/y/z and a per-vertex scalar
// `confidence` property, so viewers can color the mesh by it.
void write_ply(const TriangleMesh& mesh, const std::string& path);

// Reads the meshes we write plus plain position-only PLY (ascii or binary
// little-endian). Missing confidence defaults to 1.
TriangleMesh read_ply(const std::string& path);

}  // namespace hintmvs
