#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anthro/csv.hpp"
#include "anthro/dgp.hpp"
#include "anthro/mesh.hpp"

namespace anthro {

// Fixed cohort CSV column order. Hidden structural shocks (ability, garment
// determinants) are included: the cohort is synthetic and they are the oracle
// columns tests regress against.
inline const std::vector<std::string>& cohort_columns() {
  static const std::vector<std::string> cols{
      "id", "group", "stature", "obesity", "hip_waist", "ability",
      "shoe_det", "jacket_det", "pants_det",
      "height_mm", "weight_kg", "chest_circ_mm", "waist_circ_mm",
      "hip_circ_mm", "neck_circ_mm", "foot_length_mm", "arm_length_mm",
      "shoulder_breadth_mm",
      "reported_height_mm", "reported_weight_kg", "log_income",
      "education_years", "experience_years", "age_years", "fitness_hours",
      "race", "occupation", "marital", "birth_region", "n_children",
      "shoe_size", "pants_size", "jacket_size"};
  return cols;
}

inline std::string mesh_file_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.off", id);
  return buf;
}

inline void write_cohort_csv(const std::filesystem::path& path, const Cohort& cohort) {
  CsvWriter w(path);
  w.row(cohort_columns());
  for (const auto& s : cohort.subjects) {
    w.row({std::to_string(s.id), std::to_string(s.group),
           csv_double(s.latent.stature), csv_double(s.latent.obesity),
           csv_double(s.latent.hip_waist), csv_double(s.ability),
           csv_double(s.shoe_det), csv_double(s.jacket_det), csv_double(s.pants_det),
           csv_double(s.measures.height_mm), csv_double(s.measures.weight_kg),
           csv_double(s.measures.chest_circ_mm), csv_double(s.measures.waist_circ_mm),
           csv_double(s.measures.hip_circ_mm), csv_double(s.measures.neck_circ_mm),
           csv_double(s.measures.foot_length_mm), csv_double(s.measures.arm_length_mm),
           csv_double(s.measures.shoulder_breadth_mm),
           csv_double(s.reported_height_mm), csv_double(s.reported_weight_kg),
           csv_double(s.log_income), csv_double(s.education_years),
           csv_double(s.experience_years), csv_double(s.age_years),
           csv_double(s.fitness_hours), std::to_string(s.race),
           std::to_string(s.occupation), std::to_string(s.marital),
           std::to_string(s.birth_region), std::to_string(s.n_children),
           csv_double(s.shoe_size), csv_double(s.pants_size),
           csv_double(s.jacket_size)});
  }
  w.close();
}

// Reads back subject rows. Template/DGP metadata is not stored in the CSV;
// callers that need meshes read them from the sibling directory.
inline std::vector<SubjectRecord> read_cohort_csv(const std::filesystem::path& path) {
  CsvTable t = read_csv(path);
  if (t.header != cohort_columns())
    throw DataError("unexpected cohort CSV header in " + path.string());
  std::vector<SubjectRecord> subjects;
  subjects.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    SubjectRecord s;
    int c = 0;
    s.id = int(parse_long(r[c++]));
    s.group = int(parse_long(r[c++]));
    s.latent.stature = parse_double(r[c++]);
    s.latent.obesity = parse_double(r[c++]);
    s.latent.hip_waist = parse_double(r[c++]);
    s.ability = parse_double(r[c++]);
    s.shoe_det = parse_double(r[c++]);
    s.jacket_det = parse_double(r[c++]);
    s.pants_det = parse_double(r[c++]);
    s.measures.height_mm = parse_double(r[c++]);
    s.measures.weight_kg = parse_double(r[c++]);
    s.measures.chest_circ_mm = parse_double(r[c++]);
    s.measures.waist_circ_mm = parse_double(r[c++]);
    s.measures.hip_circ_mm = parse_double(r[c++]);
    s.measures.neck_circ_mm = parse_double(r[c++]);
    s.measures.foot_length_mm = parse_double(r[c++]);
    s.measures.arm_length_mm = parse_double(r[c++]);
    s.measures.shoulder_breadth_mm = parse_double(r[c++]);
    s.reported_height_mm = parse_double(r[c++]);
    s.reported_weight_kg = parse_double(r[c++]);
    s.log_income = parse_double(r[c++]);
    s.education_years = parse_double(r[c++]);
    s.experience_years = parse_double(r[c++]);
    s.age_years = parse_double(r[c++]);
    s.fitness_hours = parse_double(r[c++]);
    s.race = int(parse_long(r[c++]));
    s.occupation = int(parse_long(r[c++]));
    s.marital = int(parse_long(r[c++]));
    s.birth_region = int(parse_long(r[c++]));
    s.n_children = int(parse_long(r[c++]));
    s.shoe_size = parse_double(r[c++]);
    s.pants_size = parse_double(r[c++]);
    s.jacket_size = parse_double(r[c++]);
    subjects.push_back(s);
  }
  return subjects;
}

// Writes one OFF file per subject under dir, keyed by subject id.
inline void write_cohort_meshes(const std::filesystem::path& dir, const Cohort& cohort) {
  std::filesystem::create_directories(dir);
  for (const auto& s : cohort.subjects)
    write_off(dir / mesh_file_name(s.id), subject_mesh(cohort, s));
}

inline std::vector<RegisteredMesh> read_cohort_meshes(
    const std::filesystem::path& dir, const std::vector<SubjectRecord>& subjects) {
  std::vector<RegisteredMesh> meshes;
  meshes.reserve(subjects.size());
  for (const auto& s : subjects) meshes.push_back(read_off(dir / mesh_file_name(s.id)));
  return meshes;
}

}  // namespace anthro
