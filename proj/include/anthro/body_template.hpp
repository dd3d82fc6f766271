#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "anthro/errors.hpp"
#include "anthro/mesh.hpp"
#include "anthro/rng.hpp"

namespace anthro {

// Three latent body factors on a standard-normal scale. They are the ground
// truth every downstream estimator is judged against.
struct LatentBody {
  double stature = 0.0;
  double obesity = 0.0;
  double hip_waist = 0.0;
};

// Generalized-cylinder body template: `rings` cross-sections of `segments`
// vertices each, plus one apex closing each end. All cohort meshes share this
// topology, so vertex indices correspond across subjects.
struct BodyTemplate {
  int rings = 24;
  int segments = 32;
  double height_mm = 1700.0;
  double radius_scale_mm = 180.0;

  // Latent scale constants: height multiplies by exp(stature_scale * s),
  // every radius by exp(obesity_scale * o); hip_waist_scale * w modulates the
  // hip/waist bump profile.
  double stature_scale = 0.05;
  double obesity_scale = 0.08;
  double hip_waist_scale = 0.04;

  // Measurement rings (fractions of body height, bottom = 0).
  int foot_ring = 1;
  int hip_ring = 10;
  int waist_ring = 13;
  int chest_ring = 16;
  int shoulder_ring = 19;
  int neck_ring = 21;

  int vertex_count() const { return rings * segments + 2; }
  int input_dim() const { return 3 * vertex_count(); }
  int ring_vertex(int ring, int segment) const { return ring * segments + segment; }
  int bottom_apex() const { return rings * segments; }
  int top_apex() const { return rings * segments + 1; }
};

namespace body_profile {

// Dimensionless radius profile along normalized height t in [0,1]:
// tapered at the ankles and neck, widest through the torso.
inline double base_radius(double t) {
  auto bump = [](double t0, double width, double x) {
    double u = (x - t0) / width;
    return std::exp(-u * u);
  };
  return 0.42 + 0.50 * bump(0.46, 0.26, t) + 0.12 * bump(0.74, 0.10, t) -
         0.20 * bump(1.00, 0.12, t) - 0.10 * bump(0.00, 0.08, t);
}

// Hip/waist modulation: positive at the hip rings, negative at the waist
// rings, ~0 elsewhere. A positive hip_waist latent widens hips and narrows
// the waist.
inline double hip_waist_bump(double t) {
  auto bump = [](double t0, double width, double x) {
    double u = (x - t0) / width;
    return std::exp(-u * u);
  };
  return bump(0.435, 0.09, t) - bump(0.565, 0.09, t);
}

}  // namespace body_profile

inline BodyTemplate make_body_template(int rings = 24, int segments = 32) {
  if (rings < 8 || segments < 8)
    throw ConfigError("body template needs at least 8 rings and 8 segments");
  BodyTemplate t;
  t.rings = rings;
  t.segments = segments;
  auto ring_at = [&](double frac) {
    int k = int(std::lround(frac * (rings - 1)));
    return std::clamp(k, 0, rings - 1);
  };
  t.foot_ring = std::max(1, ring_at(0.043));
  t.hip_ring = ring_at(0.435);
  t.waist_ring = ring_at(0.565);
  t.chest_ring = ring_at(0.696);
  t.shoulder_ring = ring_at(0.826);
  t.neck_ring = ring_at(0.913);
  return t;
}

// Deterministic mesh synthesis from latent factors. Ring k sits at height
// z_k = (k/(R-1)) * H0 * exp(c_s * s) with radius
// r_k = rho0(t_k) * exp(c_o * o) * (1 + c_w * w * phi(t_k)), plus i.i.d.
// Gaussian vertex noise.
inline RegisteredMesh mesh_from_latents(const LatentBody& latents,
                                        const BodyTemplate& tmpl,
                                        double noise_sd_mm, std::uint64_t seed) {
  if (tmpl.rings < 8 || tmpl.segments < 8)
    throw ConfigError("body template needs at least 8 rings and 8 segments");
  if (!(noise_sd_mm >= 0.0))
    throw ConfigError("mesh noise SD must be non-negative");

  const int R = tmpl.rings, S = tmpl.segments;
  const double height = tmpl.height_mm * std::exp(tmpl.stature_scale * latents.stature);
  const double girth = std::exp(tmpl.obesity_scale * latents.obesity);

  RegisteredMesh mesh;
  mesh.vertices.resize(tmpl.vertex_count());
  for (int k = 0; k < R; ++k) {
    double t = double(k) / double(R - 1);
    double z = t * height;
    double shape = 1.0 + tmpl.hip_waist_scale * latents.hip_waist *
                             body_profile::hip_waist_bump(t);
    // Keeps the radius positive for pathological latent draws.
    shape = std::max(shape, 0.05);
    double r = tmpl.radius_scale_mm * body_profile::base_radius(t) * girth * shape;
    for (int j = 0; j < S; ++j) {
      double theta = 2.0 * M_PI * double(j) / double(S);
      mesh.vertices[tmpl.ring_vertex(k, j)] =
          Eigen::Vector3d(r * std::cos(theta), r * std::sin(theta), z);
    }
  }
  mesh.vertices[tmpl.bottom_apex()] = Eigen::Vector3d(0.0, 0.0, 0.0);
  mesh.vertices[tmpl.top_apex()] = Eigen::Vector3d(0.0, 0.0, height);

  if (noise_sd_mm > 0.0) {
    Rng rng(seed);
    for (auto& v : mesh.vertices)
      for (int c = 0; c < 3; ++c) v[c] += rng.normal(0.0, noise_sd_mm);
  }

  // Outward-oriented faces: side quads split into two triangles, apex fans
  // closing the ends.
  mesh.faces.reserve(2 * R * S);
  for (int k = 0; k + 1 < R; ++k) {
    for (int j = 0; j < S; ++j) {
      int jn = (j + 1) % S;
      int a = tmpl.ring_vertex(k, j), b = tmpl.ring_vertex(k, jn);
      int c = tmpl.ring_vertex(k + 1, jn), d = tmpl.ring_vertex(k + 1, j);
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  }
  for (int j = 0; j < S; ++j) {
    int jn = (j + 1) % S;
    mesh.faces.push_back({tmpl.bottom_apex(), tmpl.ring_vertex(0, jn),
                          tmpl.ring_vertex(0, j)});
    mesh.faces.push_back({tmpl.top_apex(), tmpl.ring_vertex(R - 1, j),
                          tmpl.ring_vertex(R - 1, jn)});
  }
  return mesh;
}

inline RegisteredMesh baseline_mesh(const BodyTemplate& tmpl) {
  return mesh_from_latents(LatentBody{}, tmpl, 0.0, 0);
}

}  // namespace anthro
