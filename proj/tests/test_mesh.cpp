#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "anthro/body_template.hpp"
#include "anthro/measures.hpp"
#include "anthro/mesh.hpp"

using namespace anthro;

namespace {

// Plain cylinder with the template vertex layout: analytic volume oracle.
RegisteredMesh make_cylinder(double radius_mm, double height_mm, int rings, int segments) {
  BodyTemplate t;
  t.rings = rings;
  t.segments = segments;
  RegisteredMesh mesh;
  mesh.vertices.resize(t.vertex_count());
  for (int k = 0; k < rings; ++k) {
    double z = height_mm * double(k) / double(rings - 1);
    for (int j = 0; j < segments; ++j) {
      double theta = 2.0 * M_PI * j / segments;
      mesh.vertices[t.ring_vertex(k, j)] =
          Eigen::Vector3d(radius_mm * std::cos(theta), radius_mm * std::sin(theta), z);
    }
  }
  mesh.vertices[t.bottom_apex()] = {0, 0, 0};
  mesh.vertices[t.top_apex()] = {0, 0, height_mm};
  RegisteredMesh shaped = mesh_from_latents(LatentBody{}, t, 0.0, 0);
  mesh.faces = shaped.faces;
  return mesh;
}

BodyTemplate cylinder_template(int rings, int segments) {
  BodyTemplate t = make_body_template(rings, segments);
  return t;
}

}  // namespace

TEST_CASE("default template has the documented vertex layout") {
  BodyTemplate t = make_body_template();
  CHECK(t.vertex_count() == 770);
  CHECK(t.input_dim() == 2310);
  RegisteredMesh mesh = baseline_mesh(t);
  CHECK(mesh.vertex_count() == 770);
  CHECK(mesh.face_count() == 2 * t.rings * t.segments);
  CHECK(is_closed(mesh));
  CHECK(signed_volume_mm3(mesh) > 0.0);
}

TEST_CASE("zero latents with zero noise reproduce the baseline exactly") {
  BodyTemplate t = make_body_template();
  RegisteredMesh a = baseline_mesh(t);
  RegisteredMesh b = mesh_from_latents(LatentBody{0, 0, 0}, t, 0.0, 1234);
  REQUIRE(a.vertex_count() == b.vertex_count());
  for (int i = 0; i < a.vertex_count(); ++i)
    CHECK(a.vertices[i] == b.vertices[i]);
  CHECK(a.faces == b.faces);
}

TEST_CASE("stature latent scales derived height by exactly exp(c_s)") {
  BodyTemplate t = make_body_template();
  BodyMeasures base = derive_measures(baseline_mesh(t), t, 1000.0);
  BodyMeasures tall =
      derive_measures(mesh_from_latents(LatentBody{1, 0, 0}, t, 0.0, 0), t, 1000.0);
  CHECK(tall.height_mm / base.height_mm == Catch::Approx(std::exp(t.stature_scale)).epsilon(1e-12));
  CHECK(base.height_mm == Catch::Approx(t.height_mm).epsilon(1e-12));
}

TEST_CASE("obesity latent scales every ring circumference by exp(c_o)") {
  BodyTemplate t = make_body_template();
  RegisteredMesh base = baseline_mesh(t);
  RegisteredMesh big = mesh_from_latents(LatentBody{0, 1, 0}, t, 0.0, 0);
  for (int k = 0; k < t.rings; ++k) {
    double ratio = ring_circumference(big, t, k) / ring_circumference(base, t, k);
    CHECK(ratio == Catch::Approx(std::exp(t.obesity_scale)).epsilon(1e-9));
  }
}

TEST_CASE("height is strictly increasing in stature, circumference in obesity") {
  BodyTemplate t = make_body_template();
  double prev_h = -1.0;
  for (double s = -2.0; s <= 2.0; s += 0.5) {
    BodyMeasures m =
        derive_measures(mesh_from_latents(LatentBody{s, 0, 0}, t, 0.0, 0), t, 1000.0);
    CHECK(m.height_mm > prev_h);
    prev_h = m.height_mm;
  }
  double prev_c = -1.0;
  for (double o = -2.0; o <= 2.0; o += 0.5) {
    RegisteredMesh mesh = mesh_from_latents(LatentBody{0, o, 0}, t, 0.0, 0);
    double c = ring_circumference(mesh, t, t.waist_ring);
    CHECK(c > prev_c);
    prev_c = c;
  }
}

TEST_CASE("hip-waist latent raises the hip-to-waist ratio") {
  BodyTemplate t = make_body_template();
  auto ratio_at = [&](double w) {
    BodyMeasures m =
        derive_measures(mesh_from_latents(LatentBody{0, 0, w}, t, 0.0, 0), t, 1000.0);
    return hip_to_waist_ratio(m.hip_circ_mm, m.waist_circ_mm);
  };
  CHECK(ratio_at(1.0) > ratio_at(0.0));
  CHECK(ratio_at(0.0) > ratio_at(-1.0));
}

TEST_CASE("unit-radius 64-gon ring has the closed-form polygon perimeter") {
  RegisteredMesh mesh = make_cylinder(1.0, 10.0, 8, 64);
  BodyTemplate t = cylinder_template(8, 64);
  double expected = 64.0 * 2.0 * std::sin(M_PI / 64.0);
  CHECK(ring_circumference(mesh, t, 0) == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("cylinder weight approaches the analytic volume as segments grow") {
  // radius 0.1 m, height 1 m, density 1000 kg/m^3 -> pi*0.01*1*1000 kg
  double exact = M_PI * 0.01 * 1.0 * 1000.0;
  RegisteredMesh mesh = make_cylinder(100.0, 1000.0, 8, 256);
  BodyTemplate t = cylinder_template(8, 256);
  BodyMeasures m = derive_measures(mesh, t, 1000.0);
  CHECK(std::abs(m.weight_kg - exact) / exact < 1e-3);
  CHECK(m.height_mm == Catch::Approx(1000.0));
}

TEST_CASE("volume error decays at the quadratic rate in segment count") {
  double exact = M_PI * 100.0 * 100.0 * 1000.0;
  auto err = [&](int segments) {
    RegisteredMesh mesh = make_cylinder(100.0, 1000.0, 8, segments);
    return std::abs(signed_volume_mm3(mesh) - exact);
  };
  double e32 = err(32), e64 = err(64), e128 = err(128);
  CHECK(e32 / e64 == Catch::Approx(4.0).margin(1.0));
  CHECK(e64 / e128 == Catch::Approx(4.0).margin(1.0));
}

TEST_CASE("open meshes are rejected when deriving measures") {
  BodyTemplate t = make_body_template(8, 8);
  RegisteredMesh mesh = baseline_mesh(t);
  mesh.faces.pop_back();
  CHECK_FALSE(is_closed(mesh));
  CHECK_THROWS_WITH(derive_measures(mesh, t, 1000.0),
                    Catch::Matchers::ContainsSubstring("volume undefined"));
}

TEST_CASE("negative vertex noise is rejected") {
  BodyTemplate t = make_body_template(8, 8);
  CHECK_THROWS_AS(mesh_from_latents(LatentBody{}, t, -1.0, 0), ConfigError);
}

TEST_CASE("templates below the minimum resolution are rejected") {
  CHECK_THROWS_AS(make_body_template(7, 32), ConfigError);
  CHECK_THROWS_AS(make_body_template(24, 7), ConfigError);
}

TEST_CASE("flatten lays out vertices in meters, x-y-z per vertex") {
  RegisteredMesh mesh;
  mesh.vertices = {{1000.0, 0.0, 0.0}, {0.0, 2000.0, 0.0}};
  mesh.faces = {};
  Eigen::VectorXd flat = flatten(mesh);
  REQUIRE(flat.size() == 6);
  Eigen::VectorXd expected(6);
  expected << 1, 0, 0, 0, 2, 0;
  CHECK(flat == expected);
}

TEST_CASE("flatten length is 3x vertex count on the default template") {
  BodyTemplate t = make_body_template();
  CHECK(flatten(baseline_mesh(t)).size() == 2310);
}

TEST_CASE("unflatten inverts flatten for any mesh") {
  BodyTemplate t = make_body_template(8, 8);
  RegisteredMesh mesh = mesh_from_latents(LatentBody{0.5, -0.3, 0.8}, t, 1.5, 42);
  RegisteredMesh back = unflatten(flatten(mesh), mesh.faces);
  REQUIRE(back.vertex_count() == mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i)
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() < 1e-9);
  CHECK(back.faces == mesh.faces);
}

TEST_CASE("bmi formula and edge cases") {
  CHECK(bmi(80.0, 2000.0) == Catch::Approx(20.0).epsilon(1e-12));
  CHECK(bmi(0.0, 1700.0) == 0.0);
  CHECK(bmi(86.76, 1782.6) == Catch::Approx(27.30).margin(0.01));
  CHECK_THROWS_AS(bmi(80.0, 0.0), DataError);
  CHECK_THROWS_AS(bmi(80.0, -5.0), DataError);
}

TEST_CASE("hip-to-waist ratio formula and edge cases") {
  CHECK(hip_to_waist_ratio(1000.0, 800.0) == Catch::Approx(125.0).epsilon(1e-12));
  CHECK(hip_to_waist_ratio(900.0, 900.0) == Catch::Approx(100.0).epsilon(1e-12));
  CHECK(hip_to_waist_ratio(1047.3, 812.6) == Catch::Approx(128.88).margin(0.01));
  CHECK_THROWS_AS(hip_to_waist_ratio(1000.0, 0.0), DataError);
}

TEST_CASE("face index validation catches out-of-range indices") {
  RegisteredMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 3}};
  CHECK_THROWS_AS(validate_face_indices(mesh), DataError);
}
