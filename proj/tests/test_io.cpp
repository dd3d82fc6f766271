#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "anthro/cohort_io.hpp"
#include "anthro/config.hpp"
#include "anthro/mesh.hpp"
#include "anthro/model_io.hpp"
#include "anthro/pipeline.hpp"

using namespace anthro;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("anthro_test_" + std::to_string(std::uint64_t(
                                 std::chrono::steady_clock::now().time_since_epoch().count())));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("OFF files round-trip bit-exactly") {
  TempDir dir;
  BodyTemplate t = make_body_template(8, 8);
  RegisteredMesh mesh = mesh_from_latents(LatentBody{0.4, -0.9, 1.1}, t, 2.0, 77);
  fs::path p = dir.path / "subject.off";
  write_off(p, mesh);
  RegisteredMesh back = read_off(p);
  REQUIRE(back.vertex_count() == mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i)
    CHECK(back.vertices[i] == mesh.vertices[i]);
  CHECK(back.faces == mesh.faces);
  write_off(dir.path / "again.off", back);
  CHECK(slurp(p) == slurp(dir.path / "again.off"));
}

TEST_CASE("OFF reader rejects missing and malformed files") {
  TempDir dir;
  CHECK_THROWS_AS(read_off(dir.path / "missing.off"), DataError);
  fs::path bad = dir.path / "bad.off";
  std::ofstream(bad) << "PLY\n1 0 0\n0 0 0\n";
  CHECK_THROWS_AS(read_off(bad), DataError);
  fs::path quad = dir.path / "quad.off";
  std::ofstream(quad) << "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  CHECK_THROWS_AS(read_off(quad), DataError);
}

TEST_CASE("cohort CSV round-trips every field bit-exactly") {
  TempDir dir;
  DGPConfig cfg;
  Cohort c = sample_cohort(30, cfg, make_body_template(8, 8), 19);
  fs::path p = dir.path / "cohort.csv";
  write_cohort_csv(p, c);
  std::vector<SubjectRecord> back = read_cohort_csv(p);
  REQUIRE(back.size() == c.subjects.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = c.subjects[i];
    const auto& b = back[i];
    CHECK(a.id == b.id);
    CHECK(a.group == b.group);
    CHECK(a.latent.stature == b.latent.stature);
    CHECK(a.latent.hip_waist == b.latent.hip_waist);
    CHECK(a.ability == b.ability);
    CHECK(a.measures.height_mm == b.measures.height_mm);
    CHECK(a.measures.weight_kg == b.measures.weight_kg);
    CHECK(a.measures.foot_length_mm == b.measures.foot_length_mm);
    CHECK(a.reported_height_mm == b.reported_height_mm);
    CHECK(a.log_income == b.log_income);
    CHECK(a.race == b.race);
    CHECK(a.n_children == b.n_children);
    CHECK(a.shoe_size == b.shoe_size);
  }
}

TEST_CASE("cohort CSV reader insists on the documented header") {
  TempDir dir;
  fs::path p = dir.path / "bad.csv";
  std::ofstream(p) << "id,height\n1,1700\n";
  CHECK_THROWS_AS(read_cohort_csv(p), DataError);
}

TEST_CASE("model files round-trip byte-identically") {
  TempDir dir;
  AutoencoderModel m = make_autoencoder(12, {8, 4}, 2);
  init_parameters(m, 55);
  fs::path p = dir.path / "model.gae";
  save_model(p, m);
  AutoencoderModel back = load_model(p);
  REQUIRE(back.encoder.size() == m.encoder.size());
  CHECK(back.input_dim() == 12);
  CHECK(back.embedding_dim() == 2);
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    CHECK(back.encoder[l].weights == m.encoder[l].weights);
    CHECK(back.encoder[l].bias == m.encoder[l].bias);
    CHECK(back.encoder[l].activation == m.encoder[l].activation);
  }
  save_model(dir.path / "model2.gae", back);
  CHECK(slurp(p) == slurp(dir.path / "model2.gae"));
}

TEST_CASE("model loader rejects corrupt headers and truncation") {
  TempDir dir;
  fs::path p = dir.path / "model.gae";
  AutoencoderModel m = make_autoencoder(6, {4}, 2);
  init_parameters(m, 1);
  save_model(p, m);

  std::string bytes = slurp(p);
  fs::path bad_magic = dir.path / "bad_magic.gae";
  {
    std::string copy = bytes;
    copy[0] = 'X';
    std::ofstream(bad_magic, std::ios::binary) << copy;
  }
  CHECK_THROWS_AS(load_model(bad_magic), DataError);

  fs::path truncated = dir.path / "truncated.gae";
  std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 16);
  CHECK_THROWS_AS(load_model(truncated), DataError);
}

TEST_CASE("run config parses every key type and applies defaults") {
  TempDir dir;
  fs::path p = dir.path / "run.cfg";
  std::ofstream(p) << "# comment line\n"
                      "seed = 42\n"
                      "cohort.n = 120   # trailing comment\n"
                      "dgp.beta_stature = 0.07\n"
                      "train.hidden_widths = 32,16,8\n"
                      "train.per_group = off\n"
                      "analysis.lasso = false\n"
                      "sweep.d_values = 1,2,3\n"
                      "out = /tmp/somewhere\n";
  RunConfig cfg = parse_run_config(p);
  CHECK(cfg.seed == 42);
  CHECK(cfg.seed_set);
  CHECK(cfg.cohort_n == 120);
  CHECK(cfg.dgp.beta_stature == 0.07);
  CHECK(cfg.train.hidden_widths == std::vector<int>{32, 16, 8});
  CHECK_FALSE(cfg.train_per_group);
  CHECK_FALSE(cfg.analyses.lasso);
  CHECK(cfg.analyses.kernel_curves);  // untouched default
  CHECK(cfg.sweep_d_values == std::vector<int>{1, 2, 3});
  CHECK(cfg.out_dir == "/tmp/somewhere");
  CHECK(cfg.train.seed == 42);
}

TEST_CASE("unknown, duplicate, and malformed config keys are rejected") {
  TempDir dir;
  auto write_cfg = [&](const std::string& body) {
    fs::path p = dir.path / "bad.cfg";
    std::ofstream(p) << body;
    return p;
  };
  CHECK_THROWS_WITH(parse_run_config(write_cfg("seed=1\nnot.a.key=2\n")),
                    Catch::Matchers::ContainsSubstring("unknown config key"));
  CHECK_THROWS_WITH(parse_run_config(write_cfg("seed=1\nseed=2\n")),
                    Catch::Matchers::ContainsSubstring("duplicate key"));
  CHECK_THROWS_WITH(parse_run_config(write_cfg("seed\n")),
                    Catch::Matchers::ContainsSubstring("expected key=value"));
  CHECK_THROWS_WITH(parse_run_config(write_cfg("train.per_group=banana\n")),
                    Catch::Matchers::ContainsSubstring("bad boolean"));
  CHECK_THROWS_WITH(parse_run_config(write_cfg("cohort.n=ten\n")),
                    Catch::Matchers::ContainsSubstring("bad value"));
  CHECK_THROWS_AS(parse_run_config(dir.path / "missing.cfg"), ConfigError);
}

TEST_CASE("a config without a seed fails validation") {
  TempDir dir;
  fs::path p = dir.path / "no_seed.cfg";
  std::ofstream(p) << "cohort.n = 10\nout = x\n";
  RunConfig cfg = parse_run_config(p);
  CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("seed"));
}

TEST_CASE("embedding CSV round-trips ids and raw components") {
  TempDir dir;
  Subjects subjects(5);
  for (int i = 0; i < 5; ++i) subjects[i].id = i * 3;
  Embedding e;
  Rng rng(91);
  e.raw.resize(5, 2);
  for (int i = 0; i < e.raw.size(); ++i) *(e.raw.data() + i) = rng.normal();
  e.mean = e.raw.colwise().mean();
  Eigen::MatrixXd centered = e.raw.rowwise() - e.mean.transpose();
  e.sd = (centered.array().square().colwise().sum() / 4.0).sqrt();
  fs::path p = dir.path / "emb.csv";
  write_embedding_csv(p, subjects, e);
  Embedding back = read_embedding_csv(p, subjects);
  CHECK(back.raw == e.raw);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("manifests merge across runs and keep deterministic ordering") {
  TempDir dir;
  std::ofstream(dir.path / "a.csv") << "x\n1\n";
  std::ofstream(dir.path / "b.csv") << "y\n2\n";
  {
    Manifest m(dir.path);
    m.record_file(dir.path / "a.csv");
    m.record_status("alpha", "ok");
    m.write();
  }
  {
    Manifest m(dir.path);  // reloads existing entries
    m.record_file(dir.path / "b.csv");
    m.record_status("beta", "disabled");
    m.write();
  }
  Manifest final_state(dir.path);
  CHECK(final_state.files().count("a.csv") == 1);
  CHECK(final_state.files().count("b.csv") == 1);
  CHECK(final_state.statuses().at("alpha") == "ok");
  CHECK(final_state.statuses().at("beta") == "disabled");
  std::string first = slurp(dir.path / "manifest.csv");
  Manifest again(dir.path);
  again.write();
  CHECK(slurp(dir.path / "manifest.csv") == first);
}

TEST_CASE("csv reader flags ragged rows and bad numbers") {
  TempDir dir;
  fs::path p = dir.path / "ragged.csv";
  std::ofstream(p) << "a,b\n1,2\n3\n";
  CHECK_THROWS_AS(read_csv(p), DataError);
  CHECK_THROWS_AS(parse_double("12x"), DataError);
  CHECK_THROWS_AS(parse_long("4.5"), DataError);
  CHECK(parse_double("nan") != parse_double("nan"));  // NaN round-trip
}
