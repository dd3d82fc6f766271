#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anthro/analyses.hpp"
#include "anthro/cohort_io.hpp"
#include "anthro/config.hpp"
#include "anthro/csv.hpp"
#include "anthro/lasso.hpp"
#include "anthro/model_io.hpp"
#include "anthro/train.hpp"

namespace anthro {

// -------- manifest --------

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Accumulating manifest of emitted files (with content hashes) and analysis
// statuses. Rewritten after every stage so a failed run keeps a partial
// manifest; merging lets synth/train/encode/regress share one out directory.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path out_dir)
      : out_dir_(std::move(out_dir)), path_(out_dir_ / "manifest.csv") {
    if (std::filesystem::exists(path_)) {
      CsvTable t = read_csv(path_);
      for (const auto& r : t.rows) {
        if (r[0] == "file")
          files_[r[1]] = {r[3], r[4]};
        else if (r[0] == "analysis")
          statuses_[r[1]] = r[2];
      }
    }
  }

  void record_file(const std::filesystem::path& file) {
    auto rel = std::filesystem::relative(file, out_dir_).generic_string();
    files_[rel] = {hex64(fnv1a64_file(file)),
                   std::to_string(std::filesystem::file_size(file))};
  }

  void record_status(const std::string& analysis, const std::string& status) {
    statuses_[analysis] = status;
  }

  void write() const {
    CsvWriter w(path_);
    w.row({"kind", "name", "status", "fnv64", "bytes"});
    for (const auto& [name, status] : statuses_)
      w.row({"analysis", name, status, "", ""});
    for (const auto& [name, info] : files_)
      w.row({"file", name, "ok", info.first, info.second});
    w.close();
  }

  const std::map<std::string, std::pair<std::string, std::string>>& files() const {
    return files_;
  }
  const std::map<std::string, std::string>& statuses() const { return statuses_; }

 private:
  std::filesystem::path out_dir_;
  std::filesystem::path path_;
  std::map<std::string, std::pair<std::string, std::string>> files_;
  std::map<std::string, std::string> statuses_;  // ordered -> deterministic
};

// -------- table and curve writers --------

inline std::string significance_stars(double coef, double se) {
  if (!(se > 0.0)) return "";
  double t = std::abs(coef / se);
  if (t > 2.576) return "***";
  if (t > 1.96) return "**";
  if (t > 1.645) return "*";
  return "";
}

inline void write_regression_table(const std::filesystem::path& path,
                                   const RegressionResult& res) {
  CsvWriter w(path);
  w.row({"term", "coefficient", "bootstrap_se", "stars", "ci_lower90", "ci_upper90"});
  for (std::size_t i = 0; i < res.names.size(); ++i) {
    bool has_se = std::isfinite(res.se[i]);
    w.row({res.names[i], csv_double(res.coefficients[i]),
           has_se ? csv_double(res.se[i]) : "",
           has_se ? significance_stars(res.coefficients[i], res.se[i]) : "",
           std::isfinite(res.ci_lower[i]) ? csv_double(res.ci_lower[i]) : "",
           std::isfinite(res.ci_upper[i]) ? csv_double(res.ci_upper[i]) : ""});
  }
  w.row({"R2_adjusted", csv_double(res.adj_r_squared), "", "", "", ""});
  w.row({"F_statistic", csv_double(res.f_statistic), "", "", "", ""});
  w.row({"p_value", csv_double(res.p_value), "", "", "", ""});
  w.row({"N", std::to_string(res.n), "", "", "", ""});
  w.row({"bootstrap_B", std::to_string(res.bootstrap_replicates), "", "", "", ""});
  w.close();
}

inline void write_curve_csv(const std::filesystem::path& path, const CurveWithBands& c) {
  CsvWriter w(path);
  w.row({"grid", "estimate", "lower90", "upper90", "supported"});
  for (Eigen::Index i = 0; i < c.grid.size(); ++i)
    w.row({csv_double(c.grid[i]), csv_double(c.estimate[i]), csv_double(c.lower90[i]),
           csv_double(c.upper90[i]), c.supported[i] ? "1" : "0"});
  w.close();
}

inline void write_quantile_fan_csv(const std::filesystem::path& path,
                                   const std::vector<std::pair<double, CurveWithBands>>& fan) {
  CsvWriter w(path);
  w.row({"tau", "grid", "estimate", "lower90", "upper90"});
  for (const auto& [tau, c] : fan)
    for (Eigen::Index i = 0; i < c.grid.size(); ++i)
      w.row({csv_double(tau), csv_double(c.grid[i]), csv_double(c.estimate[i]),
             csv_double(c.lower90[i]), csv_double(c.upper90[i])});
  w.close();
}

inline void write_history_csv(const std::filesystem::path& path, const TrainHistory& h) {
  CsvWriter w(path);
  w.row({"epoch", "train_mse", "val_mse"});
  for (std::size_t e = 0; e < h.train_mse.size(); ++e)
    w.row({std::to_string(e + 1), csv_double(h.train_mse[e]), csv_double(h.val_mse[e])});
  w.close();
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<SweepRow>& rows) {
  CsvWriter w(path);
  w.row({"d", "train_mse", "val_mse", "epochs", "seed"});
  for (const auto& r : rows)
    w.row({std::to_string(r.embedding_dim), csv_double(r.train_mse),
           csv_double(r.val_mse), std::to_string(r.epochs), std::to_string(r.seed)});
  w.close();
}

inline void write_embedding_csv(const std::filesystem::path& path, const Subjects& subjects,
                                const Embedding& emb) {
  const int d = int(emb.raw.cols());
  CsvWriter w(path);
  std::vector<std::string> header{"id"};
  for (int j = 1; j <= d; ++j) header.push_back("p" + std::to_string(j));
  for (int j = 1; j <= d; ++j) header.push_back("p" + std::to_string(j) + "_std");
  w.row(header);
  Eigen::MatrixXd z = emb.standardized();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    std::vector<std::string> row{std::to_string(subjects[i].id)};
    for (int j = 0; j < d; ++j) row.push_back(csv_double(emb.raw(i, j)));
    for (int j = 0; j < d; ++j) row.push_back(csv_double(z(i, j)));
    w.row(row);
  }
  w.close();
}

inline Embedding read_embedding_csv(const std::filesystem::path& path,
                                    const Subjects& expected_subjects) {
  CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "id")
    throw DataError("unexpected embedding CSV header in " + path.string());
  int d = int((t.header.size() - 1) / 2);
  if (t.rows.size() != expected_subjects.size())
    throw DataError("embedding rows do not match cohort subset in " + path.string());
  Embedding e;
  e.raw.resize(t.rows.size(), d);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (parse_long(t.rows[i][0]) != expected_subjects[i].id)
      throw DataError("embedding id mismatch in " + path.string());
    for (int j = 0; j < d; ++j) e.raw(i, j) = parse_double(t.rows[i][1 + j]);
  }
  e.mean = e.raw.colwise().mean();
  Eigen::MatrixXd centered = e.raw.rowwise() - e.mean.transpose();
  e.sd = (centered.array().square().colwise().sum() /
          std::max<double>(1.0, double(e.raw.rows() - 1)))
             .sqrt();
  return e;
}

// -------- summary statistics --------

inline void write_summary_csv(const std::filesystem::path& path, const Subjects& subjects) {
  struct Var {
    std::string name;
    std::function<double(const SubjectRecord&)> get;
  };
  const std::vector<Var> vars = {
      {"income_dollars", [](const auto& s) { return std::exp(s.log_income); }},
      {"log_income", [](const auto& s) { return s.log_income; }},
      {"reported_height_mm", [](const auto& s) { return s.reported_height_mm; }},
      {"reported_weight_kg", [](const auto& s) { return s.reported_weight_kg; }},
      {"reported_bmi", [](const auto& s) { return s.bmi_reported(); }},
      {"height_mm", [](const auto& s) { return s.measures.height_mm; }},
      {"weight_kg", [](const auto& s) { return s.measures.weight_kg; }},
      {"bmi", [](const auto& s) { return s.bmi_measured(); }},
      {"hip_to_waist", [](const auto& s) { return s.hip_waist_measured(); }},
      {"experience_years", [](const auto& s) { return s.experience_years; }},
      {"education_years", [](const auto& s) { return s.education_years; }},
      {"n_children", [](const auto& s) { return double(s.n_children); }},
      {"fitness_hours", [](const auto& s) { return s.fitness_hours; }},
      {"age_years", [](const auto& s) { return s.age_years; }},
  };
  CsvWriter w(path);
  w.row({"variable", "mean", "median", "sd", "min", "max"});
  for (const auto& v : vars) {
    Eigen::VectorXd x = column(subjects, v.get);
    w.row({v.name, csv_double(x.mean()), csv_double(median(x)),
           csv_double(subjects.size() > 1 ? stddev(x) : 0.0),
           csv_double(x.minCoeff()), csv_double(x.maxCoeff())});
  }
  w.close();
}

inline void write_summary_counts_csv(const std::filesystem::path& path,
                                     const Subjects& subjects) {
  CsvWriter w(path);
  w.row({"variable", "level", "count"});
  auto emit = [&](const std::string& var, const std::vector<std::string>& labels,
                  const std::function<int(const SubjectRecord&)>& get) {
    std::vector<int> counts(labels.size(), 0);
    for (const auto& s : subjects) ++counts[get(s)];
    for (std::size_t l = 0; l < labels.size(); ++l)
      w.row({var, labels[l], std::to_string(counts[l])});
  };
  emit("race", race_labels(), [](const auto& s) { return s.race; });
  emit("occupation", occupation_labels(), [](const auto& s) { return s.occupation; });
  emit("marital", marital_labels(), [](const auto& s) { return s.marital; });
  emit("birth_region", region_labels(), [](const auto& s) { return s.birth_region; });
  w.row({"group", "0", std::to_string(int(group_subset(subjects, 0).size()))});
  w.row({"group", "1", std::to_string(int(group_subset(subjects, 1).size()))});
  w.close();
}

// -------- stage plumbing --------

namespace detail {
inline constexpr std::uint64_t kTrainStageTag = 0x54524149ULL;
inline constexpr std::uint64_t kAnalysisTag = 0x414e4c59ULL;
}  // namespace detail

// Analysis subsets: per group when training is per-group, one pooled set
// otherwise.
struct AnalysisSet {
  std::string label;  // "g0", "g1" or "all"
  int group = -1;     // -1 = pooled
  Subjects subjects;
};

inline std::vector<AnalysisSet> analysis_sets(const RunConfig& cfg,
                                              const Subjects& subjects) {
  std::vector<AnalysisSet> sets;
  if (cfg.train_per_group) {
    for (int g : {0, 1}) {
      AnalysisSet s{"g" + std::to_string(g), g, group_subset(subjects, g)};
      sets.push_back(std::move(s));
    }
  } else {
    sets.push_back({"all", -1, subjects});
  }
  return sets;
}

inline std::filesystem::path out_file(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

// synth: cohort CSV + OFF meshes + summary tables.
inline Cohort stage_synth(const RunConfig& cfg, Manifest& manifest) {
  Cohort cohort = sample_cohort(cfg.cohort_n, cfg.dgp, cfg.body_template(), cfg.seed);
  std::filesystem::create_directories(cfg.out_dir);
  write_cohort_csv(out_file(cfg, "cohort.csv"), cohort);
  manifest.record_file(out_file(cfg, "cohort.csv"));
  write_cohort_meshes(out_file(cfg, "meshes"), cohort);
  for (const auto& s : cohort.subjects)
    manifest.record_file(out_file(cfg, "meshes") / mesh_file_name(s.id));
  if (cfg.analyses.summary) {
    write_summary_csv(out_file(cfg, "summary.csv"), cohort.subjects);
    manifest.record_file(out_file(cfg, "summary.csv"));
    write_summary_counts_csv(out_file(cfg, "summary_counts.csv"), cohort.subjects);
    manifest.record_file(out_file(cfg, "summary_counts.csv"));
    for (const auto& set : analysis_sets(cfg, cohort.subjects)) {
      if (set.subjects.empty()) continue;
      write_summary_csv(out_file(cfg, "summary_" + set.label + ".csv"), set.subjects);
      manifest.record_file(out_file(cfg, "summary_" + set.label + ".csv"));
    }
    manifest.record_status("summary", "ok");
  } else {
    manifest.record_status("summary", "disabled");
  }
  return cohort;
}

inline Eigen::MatrixXd subset_mesh_matrix(const Cohort& cohort, const Subjects& subset) {
  Eigen::MatrixXd data(cohort.template_info.input_dim(), subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    RegisteredMesh mesh = subject_mesh(cohort, subset[i]);
    data.col(i) = flatten(mesh);
  }
  return data;
}

struct TrainedModels {
  std::map<std::string, AutoencoderModel> by_label;
};

// train: one model (+history, + optional dimension sweep) per analysis set.
inline TrainedModels stage_train(const RunConfig& cfg, const Cohort& cohort,
                                 Manifest& manifest) {
  TrainedModels models;
  int set_index = 0;
  for (const auto& set : analysis_sets(cfg, cohort.subjects)) {
    ++set_index;
    if (set.subjects.size() < 2)
      throw DataError("analysis set " + set.label + " too small to train");
    Eigen::MatrixXd data = subset_mesh_matrix(cohort, set.subjects);
    TrainConfig tc = cfg.train;
    tc.seed = derive_stream(cfg.seed, detail::kTrainStageTag, set_index);
    TrainResult result = train(data, tc);
    save_model(out_file(cfg, "model_" + set.label + ".gae"), result.model);
    manifest.record_file(out_file(cfg, "model_" + set.label + ".gae"));
    write_history_csv(out_file(cfg, "history_" + set.label + ".csv"), result.history);
    manifest.record_file(out_file(cfg, "history_" + set.label + ".csv"));
    if (cfg.analyses.sweep) {
      TrainConfig sc = tc;
      if (cfg.sweep_epochs > 0) sc.epochs = cfg.sweep_epochs;
      std::vector<SweepRow> rows = dim_sweep(data, cfg.sweep_d_values, sc);
      write_sweep_csv(out_file(cfg, "sweep_" + set.label + ".csv"), rows);
      manifest.record_file(out_file(cfg, "sweep_" + set.label + ".csv"));
    }
    models.by_label[set.label] = std::move(result.model);
  }
  manifest.record_status("sweep", cfg.analyses.sweep ? "ok" : "disabled");
  return models;
}

// encode: embedding CSV per analysis set.
inline std::map<std::string, Embedding> stage_encode(const RunConfig& cfg,
                                                     const Cohort& cohort,
                                                     const TrainedModels& models,
                                                     Manifest& manifest) {
  std::map<std::string, Embedding> embeddings;
  for (const auto& set : analysis_sets(cfg, cohort.subjects)) {
    auto it = models.by_label.find(set.label);
    if (it == models.by_label.end())
      throw DataError("no trained model for analysis set " + set.label);
    Eigen::MatrixXd data = subset_mesh_matrix(cohort, set.subjects);
    Embedding emb = compute_embedding(it->second, data);
    write_embedding_csv(out_file(cfg, "embeddings_" + set.label + ".csv"), set.subjects,
                        emb);
    manifest.record_file(out_file(cfg, "embeddings_" + set.label + ".csv"));
    embeddings[set.label] = std::move(emb);
  }
  return embeddings;
}

namespace detail {

inline std::uint64_t analysis_seed(const RunConfig& cfg, int set_index, int slot) {
  return derive_stream(cfg.seed, kAnalysisTag, std::uint64_t(set_index) * 64 + slot);
}

}  // namespace detail

// regress: every toggled table/curve analog for one analysis set.
inline void run_analyses_for_set(const RunConfig& cfg, const AnalysisSet& set,
                                 int set_index, const Embedding* embedding,
                                 Manifest& manifest) {
  const Subjects& subj = set.subjects;
  const int B = cfg.bootstrap_replicates;
  const std::string suffix = "_" + set.label + ".csv";
  auto emit = [&](const std::string& base, const auto& writer) {
    writer();
    manifest.record_file(out_file(cfg, base + suffix));
  };

  Eigen::VectorXd height = column(subj, [](const auto& s) { return s.measures.height_mm; });
  Eigen::VectorXd weight = column(subj, [](const auto& s) { return s.measures.weight_kg; });
  Eigen::VectorXd rep_height = column(subj, [](const auto& s) { return s.reported_height_mm; });
  Eigen::VectorXd rep_weight = column(subj, [](const auto& s) { return s.reported_weight_kg; });
  Eigen::VectorXd bmi_meas = column(subj, [](const auto& s) { return s.bmi_measured(); });
  Eigen::VectorXd bmi_rep = column(subj, [](const auto& s) { return s.bmi_reported(); });
  Eigen::VectorXd hw_ratio = column(subj, [](const auto& s) { return s.hip_waist_measured(); });
  Eigen::VectorXd err_height = column(subj, [](const auto& s) { return s.reporting_error_height(); });
  Eigen::VectorXd err_weight = column(subj, [](const auto& s) { return s.reporting_error_weight(); });

  if (cfg.analyses.reporting_errors) {
    emit("reporting_error_height", [&] {
      write_regression_table(out_file(cfg, "reporting_error_height" + suffix),
                             reporting_error_regression(subj, true, B,
                                                        detail::analysis_seed(cfg, set_index, 1)));
    });
    emit("reporting_error_weight", [&] {
      write_regression_table(out_file(cfg, "reporting_error_weight" + suffix),
                             reporting_error_regression(subj, false, B,
                                                        detail::analysis_seed(cfg, set_index, 2)));
    });
  }

  if (cfg.analyses.kernel_curves) {
    auto curve = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& e, int slot) {
      Eigen::VectorXd grid = linspace(quantile(x, 0.05), quantile(x, 0.95), 40);
      return kernel_curve_with_bands(x, e, grid, B, detail::analysis_seed(cfg, set_index, slot));
    };
    emit("kernel_error_height", [&] {
      write_curve_csv(out_file(cfg, "kernel_error_height" + suffix), curve(height, err_height, 3));
    });
    emit("kernel_error_weight", [&] {
      write_curve_csv(out_file(cfg, "kernel_error_weight" + suffix), curve(weight, err_weight, 4));
    });
  }

  if (cfg.analyses.quantile_curves) {
    const std::vector<double> taus = {0.10, 0.25, 0.50, 0.75, 0.90};
    auto fan = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& e, int slot) {
      Eigen::VectorXd grid = linspace(quantile(x, 0.05), quantile(x, 0.95), 40);
      std::vector<std::pair<double, CurveWithBands>> out;
      for (double tau : taus)
        out.emplace_back(tau, quantile_curve_with_bands(
                                  x, e, tau, 3, grid, B,
                                  detail::analysis_seed(cfg, set_index, slot)));
      return out;
    };
    emit("quantile_error_height", [&] {
      write_quantile_fan_csv(out_file(cfg, "quantile_error_height" + suffix),
                             fan(height, err_height, 5));
    });
    emit("quantile_error_weight", [&] {
      write_quantile_fan_csv(out_file(cfg, "quantile_error_weight" + suffix),
                             fan(weight, err_weight, 6));
    });
  }

  if (cfg.analyses.income_conventional) {
    struct Spec {
      std::string base;
      std::vector<std::string> names;
      std::vector<Eigen::VectorXd> cols;
    };
    const std::vector<Spec> specs = {
        {"income_height_rep", {"height"}, {rep_height}},
        {"income_height_meas", {"height"}, {height}},
        {"income_height_weight_rep", {"height", "weight"}, {rep_height, rep_weight}},
        {"income_height_weight_meas", {"height", "weight"}, {height, weight}},
        {"income_bmi_rep", {"bmi"}, {bmi_rep}},
        {"income_bmi_meas", {"bmi"}, {bmi_meas}},
        {"income_bmi_weight_rep", {"bmi", "weight"}, {bmi_rep, rep_weight}},
        {"income_bmi_weight_meas", {"bmi", "weight"}, {bmi_meas, weight}},
        {"income_bmi_height_rep", {"bmi", "height"}, {bmi_rep, rep_height}},
        {"income_bmi_height_meas", {"bmi", "height"}, {bmi_meas, height}},
        {"income_height_bmi_ratio_meas",
         {"height", "bmi", "hip_to_waist"},
         {height, bmi_meas, hw_ratio}},
    };
    int slot = 8;
    for (const auto& sp : specs) {
      emit(sp.base, [&] {
        write_regression_table(out_file(cfg, sp.base + suffix),
                               income_regression(subj, sp.names, sp.cols, B,
                                                 detail::analysis_seed(cfg, set_index, slot)));
      });
      ++slot;
    }
  }

  DesignMatrix body = body_measure_columns(subj);
  if (cfg.analyses.body_measures) {
    emit("income_bodymeasures", [&] {
      std::vector<Eigen::VectorXd> cols;
      for (int j = 0; j < body.p(); ++j) cols.push_back(body.values.col(j));
      write_regression_table(out_file(cfg, "income_bodymeasures" + suffix),
                             income_regression(subj, body.names, cols, B,
                                               detail::analysis_seed(cfg, set_index, 20)));
    });
  }

  if (cfg.analyses.lasso) {
    DesignMatrix interactions = build_interactions(body);
    DesignMatrix controls = income_controls(subj);
    Eigen::MatrixXd Z(interactions.n(), controls.p() - 1 + interactions.p());
    std::vector<std::string> z_names;
    for (int j = 1; j < controls.p(); ++j) {  // skip the intercept column
      Z.col(j - 1) = controls.values.col(j);
      z_names.push_back(controls.names[j]);
    }
    Z.rightCols(interactions.p()) = interactions.values;
    z_names.insert(z_names.end(), interactions.names.begin(), interactions.names.end());

    Eigen::VectorXd y = log_income_vector(subj);
    double lmax = lasso_lambda_max(Z, y);
    LassoResult cv = lasso_cv(Z, z_names, y, lasso_lambda_grid(lmax), 10,
                              detail::analysis_seed(cfg, set_index, 21));
    emit("lasso_cv", [&] {
      CsvWriter w(out_file(cfg, "lasso_cv" + suffix));
      w.row({"lambda", "cv_mse", "cv_se", "n_active"});
      for (int l = 0; l < cv.lambda_grid.size(); ++l) {
        int active = 0;
        for (int j = 0; j < cv.coefficient_path.rows(); ++j)
          if (cv.coefficient_path(j, l) != 0.0) ++active;
        w.row({csv_double(cv.lambda_grid[l]), csv_double(cv.cv_mse[l]),
               csv_double(cv.cv_se[l]), std::to_string(active)});
      }
      w.row({"lambda_min", csv_double(cv.lambda_min), "", ""});
      w.row({"lambda_1se", csv_double(cv.lambda_1se), "", ""});
      w.close();
    });
    emit("post_lasso", [&] {
      DesignBuilder pb(int(Z.rows()));
      pb.intercept();
      for (int j : cv.active_set) pb.add(z_names[j], Z.col(j));
      write_regression_table(out_file(cfg, "post_lasso" + suffix),
                             ols_with_inference(pb.build(), y, B,
                                                detail::analysis_seed(cfg, set_index, 22)));
    });
  }

  std::optional<AlignedEmbedding> aligned;
  if (embedding != nullptr) aligned = align_embedding(subj, *embedding);

  auto embedding_cols = [&](int count) {
    std::vector<Eigen::VectorXd> cols;
    for (int j = 0; j < count; ++j) cols.push_back(aligned->components.col(j));
    return cols;
  };

  if (cfg.analyses.embedding_regressions && aligned) {
    const int d = int(aligned->components.cols());
    emit("income_embedding_p1", [&] {
      write_regression_table(out_file(cfg, "income_embedding_p1" + suffix),
                             income_regression(subj, {"P1"}, {aligned->components.col(0)}, B,
                                               detail::analysis_seed(cfg, set_index, 23)));
    });
    if (d >= 2) {
      emit("income_embedding_p2", [&] {
        write_regression_table(out_file(cfg, "income_embedding_p2" + suffix),
                               income_regression(subj, {"P2"}, {aligned->components.col(1)}, B,
                                                 detail::analysis_seed(cfg, set_index, 24)));
      });
      emit("income_embedding_all", [&] {
        std::vector<std::string> names(aligned->names.begin(), aligned->names.end());
        write_regression_table(out_file(cfg, "income_embedding_all" + suffix),
                               income_regression(subj, names, embedding_cols(d), B,
                                                 detail::analysis_seed(cfg, set_index, 25)));
      });
    }
  }

  if (cfg.analyses.embedding_measure_fits && aligned) {
    emit("embedding_measure_fits", [&] {
      CsvWriter w(out_file(cfg, "embedding_measure_fits" + suffix));
      w.row({"component", "measure", "slope", "intercept", "r_squared"});
      const std::vector<std::pair<std::string, Eigen::VectorXd>> measures = {
          {"height_mm", height}, {"bmi", bmi_meas}, {"weight_kg", weight},
          {"hip_to_waist", hw_ratio}};
      for (int j = 0; j < aligned->components.cols(); ++j)
        for (const auto& [mname, mcol] : measures) {
          LinearFitSummary fit = simple_linear_fit(aligned->components.col(j), mcol);
          w.row({aligned->names[j], mname, csv_double(fit.slope),
                 csv_double(fit.intercept), csv_double(fit.r_squared)});
        }
      w.close();
    });
  }

  if (cfg.analyses.proxy && aligned) {
    emit("proxy", [&] {
      DesignMatrix X = income_controls(subj);
      const int n = int(subj.size());
      DesignBuilder proxies(n);
      proxies.add("fitness", column(subj, [](const auto& s) { return s.fitness_hours; }));
      std::vector<int> reg(n);
      for (int i = 0; i < n; ++i) reg[i] = subj[i].birth_region;
      proxies.add_categorical("birth_region", reg, region_labels());
      DesignBuilder features(n);
      for (int j = 0; j < aligned->components.cols(); ++j)
        features.add(aligned->names[j], aligned->components.col(j));
      RegressionResult res = proxy_ols(log_income_vector(subj), X, proxies.build(),
                                       features.build());
      BootstrapInference inf;
      DesignMatrix full = hcat(hcat(X, proxies.build()), features.build());
      inf = bootstrap_inference(full, log_income_vector(subj), B,
                                detail::analysis_seed(cfg, set_index, 26));
      res.se = inf.se;
      res.ci_lower = inf.ci_lower;
      res.ci_upper = inf.ci_upper;
      res.bootstrap_replicates = inf.replicates;
      write_regression_table(out_file(cfg, "proxy" + suffix), res);
    });
  }

  std::optional<CFResult> cf_deep, cf_conv;
  if ((cfg.analyses.control_function || cfg.analyses.comparison) && aligned) {
    ResidualInstruments iv = garment_instruments(subj);
    DesignMatrix X = income_controls(subj);
    Eigen::VectorXd y = log_income_vector(subj);
    const int d = int(aligned->components.cols());
    std::vector<Eigen::VectorXd> others_deep;
    std::vector<std::string> other_names_deep;
    for (int j = 1; j < d; ++j) {
      others_deep.push_back(aligned->components.col(j));
      other_names_deep.push_back(aligned->names[j]);
    }
    cf_deep = control_function(y, X, aligned->components.col(0), "P1", others_deep,
                               other_names_deep, iv.values, iv.names, B,
                               detail::analysis_seed(cfg, set_index, 27));
    cf_conv = control_function(y, X, height, "height", {bmi_meas, hw_ratio},
                               {"bmi", "hip_to_waist"}, iv.values, iv.names, B,
                               detail::analysis_seed(cfg, set_index, 28));
  }

  auto write_cf_tables = [&](const std::string& tag, const CFResult& cf) {
    emit("first_stage_" + tag, [&] {
      CsvWriter w(out_file(cfg, "first_stage_" + tag + suffix));
      w.row({"term", "coefficient", "bootstrap_se", "stars", "ci_lower90", "ci_upper90"});
      const auto& r = cf.first.regression;
      for (std::size_t i = 0; i < r.names.size(); ++i)
        w.row({r.names[i], csv_double(r.coefficients[i]), csv_double(r.se[i]),
               significance_stars(r.coefficients[i], r.se[i]),
               csv_double(r.ci_lower[i]), csv_double(r.ci_upper[i])});
      w.row({"instrument_F", csv_double(cf.first.instrument_f), "", "", "", ""});
      w.row({"weak_instruments", cf.first.weak_instruments ? "1" : "0", "", "", "", ""});
      w.row({"N", std::to_string(r.n), "", "", "", ""});
      w.close();
    });
    emit("control_function_" + tag, [&] {
      CsvWriter w(out_file(cfg, "control_function_" + tag + suffix));
      w.row({"term", "coefficient", "bootstrap_se", "stars", "ci_lower90", "ci_upper90"});
      const auto& r = cf.second;
      for (std::size_t i = 0; i < r.names.size(); ++i)
        w.row({r.names[i], csv_double(r.coefficients[i]), csv_double(r.se[i]),
               significance_stars(r.coefficients[i], r.se[i]),
               csv_double(r.ci_lower[i]), csv_double(r.ci_upper[i])});
      w.row({"pi_t", csv_double(cf.pi_t), "", "", "", ""});
      w.row({"endogenous", cf.endogenous_flag ? "1" : "0", "", "", "", ""});
      w.row({"weak_instruments", cf.weak_instruments ? "1" : "0", "", "", "", ""});
      w.row({"R2_adjusted", csv_double(r.adj_r_squared), "", "", "", ""});
      w.row({"N", std::to_string(r.n), "", "", "", ""});
      w.close();
    });
  };
  if (cfg.analyses.control_function && cf_deep) {
    write_cf_tables("deep", *cf_deep);
    write_cf_tables("conventional", *cf_conv);
  }

  if (cfg.analyses.comparison && aligned && cf_deep) {
    emit("comparison", [&] {
      CsvWriter w(out_file(cfg, "comparison" + suffix));
      w.row({"model", "term", "coefficient", "lower90", "upper90"});
      const int d = int(aligned->components.cols());
      std::vector<std::string> names(aligned->names.begin(), aligned->names.end());
      RegressionResult deep_ols =
          income_regression(subj, names, embedding_cols(d), B,
                            detail::analysis_seed(cfg, set_index, 29));
      RegressionResult conv_ols = income_regression(
          subj, {"height", "bmi", "hip_to_waist"}, {height, bmi_meas, hw_ratio}, B,
          detail::analysis_seed(cfg, set_index, 30));
      auto rows_for = [&](const std::string& model, const RegressionResult& r,
                          const std::vector<std::string>& terms) {
        for (const auto& t : terms) {
          int i = r.index_of(t);
          w.row({model, t, csv_double(r.coefficients[i]), csv_double(r.ci_lower[i]),
                 csv_double(r.ci_upper[i])});
        }
      };
      rows_for("deep_ols", deep_ols, names);
      rows_for("deep_cf", cf_deep->second, names);
      rows_for("conventional_ols", conv_ols, {"height", "bmi", "hip_to_waist"});
      rows_for("conventional_cf", cf_conv->second, {"height", "bmi", "hip_to_waist"});
      w.close();
    });
  }
}

inline void stage_regress(const RunConfig& cfg, const Subjects& subjects,
                          const std::map<std::string, Embedding>& embeddings,
                          Manifest& manifest) {
  const bool needs_embedding = cfg.analyses.any_embedding_analysis();
  int set_index = 0;
  for (const auto& set : analysis_sets(cfg, subjects)) {
    ++set_index;
    if (set.subjects.size() < 30)
      throw DataError("analysis set " + set.label + " too small (n=" +
                      std::to_string(set.subjects.size()) + ")");
    const Embedding* emb = nullptr;
    auto it = embeddings.find(set.label);
    if (it != embeddings.end()) emb = &it->second;
    if (needs_embedding && emb == nullptr)
      throw DataError("analysis set " + set.label + " has no embeddings");
    run_analyses_for_set(cfg, set, set_index, emb, manifest);
  }
  auto status = [&](bool on) { return on ? "ok" : "disabled"; };
  manifest.record_status("reporting_errors", status(cfg.analyses.reporting_errors));
  manifest.record_status("kernel_curves", status(cfg.analyses.kernel_curves));
  manifest.record_status("quantile_curves", status(cfg.analyses.quantile_curves));
  manifest.record_status("income_conventional", status(cfg.analyses.income_conventional));
  manifest.record_status("body_measures", status(cfg.analyses.body_measures));
  manifest.record_status("lasso", status(cfg.analyses.lasso));
  manifest.record_status("embedding_regressions",
                         status(cfg.analyses.embedding_regressions));
  manifest.record_status("embedding_measure_fits",
                         status(cfg.analyses.embedding_measure_fits));
  manifest.record_status("proxy", status(cfg.analyses.proxy));
  manifest.record_status("control_function", status(cfg.analyses.control_function));
  manifest.record_status("comparison", status(cfg.analyses.comparison));
}

// -------- commands --------

inline void cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  Manifest manifest(cfg.out_dir);
  stage_synth(cfg, manifest);
  manifest.write();
}

inline Cohort load_cohort(const RunConfig& cfg) {
  Cohort cohort;
  cohort.subjects = read_cohort_csv(out_file(cfg, "cohort.csv"));
  cohort.template_info = cfg.body_template();
  cohort.dgp = cfg.dgp;
  cohort.seed = cfg.seed;
  return cohort;
}

inline void cmd_train(const RunConfig& cfg) {
  cfg.validate();
  if (!std::filesystem::exists(out_file(cfg, "cohort.csv")))
    throw DataError("missing cohort: run synth first (" +
                    out_file(cfg, "cohort.csv").string() + ")");
  Manifest manifest(cfg.out_dir);
  Cohort cohort = load_cohort(cfg);
  stage_train(cfg, cohort, manifest);
  manifest.write();
}

inline void cmd_encode(const RunConfig& cfg) {
  cfg.validate();
  Manifest manifest(cfg.out_dir);
  Cohort cohort = load_cohort(cfg);
  TrainedModels models;
  for (const auto& set : analysis_sets(cfg, cohort.subjects)) {
    auto path = out_file(cfg, "model_" + set.label + ".gae");
    if (!std::filesystem::exists(path))
      throw DataError("missing model: run train first (" + path.string() + ")");
    models.by_label[set.label] = load_model(path);
  }
  stage_encode(cfg, cohort, models, manifest);
  manifest.write();
}

inline void cmd_regress(const RunConfig& cfg) {
  cfg.validate();
  Manifest manifest(cfg.out_dir);
  Cohort cohort = load_cohort(cfg);
  std::map<std::string, Embedding> embeddings;
  if (cfg.analyses.any_embedding_analysis()) {
    for (const auto& set : analysis_sets(cfg, cohort.subjects)) {
      auto path = out_file(cfg, "embeddings_" + set.label + ".csv");
      if (!std::filesystem::exists(path))
        throw DataError("missing embeddings: run encode first (" + path.string() + ")");
      embeddings[set.label] = read_embedding_csv(path, set.subjects);
    }
  }
  stage_regress(cfg, cohort.subjects, embeddings, manifest);
  manifest.write();
}

// Full pipeline. A stage failure aborts with the stage name; the manifest
// written so far is retained on disk.
inline void cmd_replicate(const RunConfig& cfg) {
  cfg.validate();
  Manifest manifest(cfg.out_dir);
  auto run_stage = [&](const char* name, auto&& fn) {
    try {
      fn();
      manifest.write();
    } catch (const std::exception& e) {
      manifest.write();
      throw DataError(std::string("stage ") + name + " failed: " + e.what());
    }
  };

  Cohort cohort;
  run_stage("synth", [&] { cohort = stage_synth(cfg, manifest); });

  TrainedModels models;
  std::map<std::string, Embedding> embeddings;
  const bool needs_embedding = cfg.analyses.any_embedding_analysis();
  if (needs_embedding) {
    run_stage("train", [&] { models = stage_train(cfg, cohort, manifest); });
    run_stage("encode",
              [&] { embeddings = stage_encode(cfg, cohort, models, manifest); });
  } else {
    manifest.record_status("sweep", "disabled");
  }
  run_stage("regress",
            [&] { stage_regress(cfg, cohort.subjects, embeddings, manifest); });
}

}  // namespace anthro
