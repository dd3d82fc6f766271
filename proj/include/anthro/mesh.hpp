#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"

namespace anthro {

// Fixed-topology triangular mesh. Vertex indices are semantic: index i refers
// to the same body location on every mesh of a cohort. Coordinates in mm.
struct RegisteredMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;

  int vertex_count() const { return int(vertices.size()); }
  int face_count() const { return int(faces.size()); }
};

inline void validate_face_indices(const RegisteredMesh& mesh) {
  const int n = mesh.vertex_count();
  for (const auto& f : mesh.faces)
    for (int idx : f)
      if (idx < 0 || idx >= n)
        throw DataError("face index " + std::to_string(idx) +
                        " out of range (vertex count " + std::to_string(n) + ")");
}

// Closed = every undirected edge is shared by exactly two faces.
inline bool is_closed(const RegisteredMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_count)
    if (count != 2) return false;
  return !mesh.faces.empty();
}

// Signed-tetrahedron sum; exact polyhedron volume for closed meshes with
// outward-oriented faces. Input mm, output mm^3.
inline double signed_volume_mm3(const RegisteredMesh& mesh) {
  double vol6 = 0.0;
  for (const auto& f : mesh.faces) {
    const Eigen::Vector3d& a = mesh.vertices[f[0]];
    const Eigen::Vector3d& b = mesh.vertices[f[1]];
    const Eigen::Vector3d& c = mesh.vertices[f[2]];
    vol6 += a.dot(b.cross(c));
  }
  return vol6 / 6.0;
}

// Concatenated (x1,y1,z1,x2,...) vertex coordinates, converted mm -> m.
// This is the network input layout.
inline Eigen::VectorXd flatten(const RegisteredMesh& mesh) {
  Eigen::VectorXd out(3 * mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    out.segment<3>(3 * i) = mesh.vertices[i] * 1e-3;
  return out;
}

inline RegisteredMesh unflatten(const Eigen::VectorXd& coords_m,
                                std::vector<std::array<int, 3>> faces) {
  if (coords_m.size() % 3 != 0)
    throw DataError("flattened mesh length must be a multiple of 3");
  RegisteredMesh mesh;
  mesh.vertices.resize(coords_m.size() / 3);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    mesh.vertices[i] = coords_m.segment<3>(3 * i) * 1e3;
  mesh.faces = std::move(faces);
  return mesh;
}

namespace detail {
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

// ASCII OFF: "OFF", then "nv nf ne", vertex lines, face lines "3 i j k".
inline void write_off(const std::filesystem::path& path,
                      const RegisteredMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out << "OFF\n"
      << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
  for (const auto& v : mesh.vertices)
    out << detail::format_g17(v.x()) << ' ' << detail::format_g17(v.y()) << ' '
        << detail::format_g17(v.z()) << '\n';
  for (const auto& f : mesh.faces)
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

inline RegisteredMesh read_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::string header;
  in >> header;
  if (header != "OFF") throw DataError("not an OFF file: " + path.string());
  long nv = 0, nf = 0, ne = 0;
  in >> nv >> nf >> ne;
  if (!in || nv < 0 || nf < 0)
    throw DataError("bad OFF counts line: " + path.string());
  RegisteredMesh mesh;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) in >> v.x() >> v.y() >> v.z();
  mesh.faces.resize(nf);
  for (auto& f : mesh.faces) {
    int k = 0;
    in >> k >> f[0] >> f[1] >> f[2];
    if (k != 3) throw DataError("non-triangular face in " + path.string());
  }
  if (!in) throw DataError("truncated OFF file: " + path.string());
  validate_face_indices(mesh);
  return mesh;
}

}  // namespace anthro
