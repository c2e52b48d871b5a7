// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <vector>

namespace sist::evalkit {

struct TriangleMesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }

  // Sum of signed tetrahedron volumes; magnitude is the enclosed volume for
  // closed meshes.
  double signed_volume() const;

  void validate() const;
};

// OBJ export: vertices and triangle faces only.
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

TriangleMesh load_obj(const std::filesystem::path& path);

}  // namespace sist::evalkit
