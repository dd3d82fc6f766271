#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "anthro/body_template.hpp"
#include "anthro/errors.hpp"
#include "anthro/mesh.hpp"

namespace anthro {

// Tape-measure style quantities read off a registered mesh at fixed template
// ring indices. Lengths in mm, weight in kg.
struct BodyMeasures {
  double height_mm = 0.0;
  double weight_kg = 0.0;
  double chest_circ_mm = 0.0;
  double waist_circ_mm = 0.0;
  double hip_circ_mm = 0.0;
  double neck_circ_mm = 0.0;
  double foot_length_mm = 0.0;
  double arm_length_mm = 0.0;
  double shoulder_breadth_mm = 0.0;
};

// Polygonal perimeter of one template ring.
inline double ring_circumference(const RegisteredMesh& mesh,
                                 const BodyTemplate& tmpl, int ring) {
  double perimeter = 0.0;
  for (int j = 0; j < tmpl.segments; ++j) {
    const auto& a = mesh.vertices[tmpl.ring_vertex(ring, j)];
    const auto& b = mesh.vertices[tmpl.ring_vertex(ring, (j + 1) % tmpl.segments)];
    perimeter += (a - b).norm();
  }
  return perimeter;
}

inline BodyMeasures derive_measures(const RegisteredMesh& mesh,
                                    const BodyTemplate& tmpl,
                                    double density_kg_m3) {
  if (mesh.vertex_count() != tmpl.vertex_count())
    throw DataError("mesh does not match template topology: " +
                    std::to_string(mesh.vertex_count()) + " vertices vs " +
                    std::to_string(tmpl.vertex_count()));
  if (!(density_kg_m3 > 0.0)) throw ConfigError("density must be positive");
  if (!is_closed(mesh)) throw DataError("volume undefined: mesh is not closed");

  BodyMeasures m;
  double zmin = mesh.vertices[0].z(), zmax = zmin;
  for (const auto& v : mesh.vertices) {
    zmin = std::min(zmin, v.z());
    zmax = std::max(zmax, v.z());
  }
  m.height_mm = zmax - zmin;

  m.chest_circ_mm = ring_circumference(mesh, tmpl, tmpl.chest_ring);
  m.waist_circ_mm = ring_circumference(mesh, tmpl, tmpl.waist_ring);
  m.hip_circ_mm = ring_circumference(mesh, tmpl, tmpl.hip_ring);
  m.neck_circ_mm = ring_circumference(mesh, tmpl, tmpl.neck_ring);

  double xmin = mesh.vertices[tmpl.ring_vertex(tmpl.shoulder_ring, 0)].x();
  double xmax = xmin;
  for (int j = 0; j < tmpl.segments; ++j) {
    double x = mesh.vertices[tmpl.ring_vertex(tmpl.shoulder_ring, j)].x();
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  m.shoulder_breadth_mm = xmax - xmin;

  const auto& f0 = mesh.vertices[tmpl.ring_vertex(tmpl.foot_ring, 0)];
  const auto& f1 = mesh.vertices[tmpl.ring_vertex(tmpl.foot_ring, tmpl.segments / 2)];
  m.foot_length_mm = 1.5 * (f0 - f1).norm();

  const auto& s0 = mesh.vertices[tmpl.ring_vertex(tmpl.shoulder_ring, 0)];
  const auto& h0 = mesh.vertices[tmpl.ring_vertex(tmpl.hip_ring, 0)];
  m.arm_length_mm = (s0 - h0).norm();

  double volume_m3 = signed_volume_mm3(mesh) * 1e-9;
  if (!(volume_m3 > 0.0))
    throw NumericalError("mesh volume is non-positive; orientation broken");
  m.weight_kg = density_kg_m3 * volume_m3;
  return m;
}

// Weight in kg divided by height in meters squared.
inline double bmi(double weight_kg, double height_mm) {
  if (!(height_mm > 0.0)) throw DataError("bmi: height must be positive");
  double h_m = height_mm * 1e-3;
  return weight_kg / (h_m * h_m);
}

// Hip circumference over waist circumference, times 100.
inline double hip_to_waist_ratio(double hip_circ_mm, double waist_circ_mm) {
  if (!(waist_circ_mm > 0.0))
    throw DataError("hip_to_waist_ratio: waist must be positive");
  return hip_circ_mm / waist_circ_mm * 100.0;
}

}  // namespace anthro
