#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anthro/body_template.hpp"
#include "anthro/dgp.hpp"
#include "anthro/errors.hpp"
#include "anthro/train.hpp"

namespace anthro {

struct AnalysisToggles {
  bool summary = true;
  bool reporting_errors = true;
  bool kernel_curves = true;
  bool quantile_curves = true;
  bool income_conventional = true;
  bool body_measures = true;
  bool lasso = true;
  bool embedding_regressions = true;
  bool embedding_measure_fits = true;
  bool proxy = true;
  bool control_function = true;
  bool sweep = true;
  bool comparison = true;

  bool any_embedding_analysis() const {
    return embedding_regressions || embedding_measure_fits || proxy ||
           control_function || sweep || comparison;
  }
};

struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;

  int cohort_n = 600;
  int template_rings = 24;
  int template_segments = 32;
  double template_height_mm = 1700.0;
  double template_radius_scale_mm = 180.0;
  double template_stature_scale = 0.05;
  double template_obesity_scale = 0.08;
  double template_hip_waist_scale = 0.04;

  DGPConfig dgp;
  TrainConfig train;
  bool train_per_group = true;
  std::vector<int> sweep_d_values = {1, 2, 3, 4, 5};
  int sweep_epochs = 0;  // 0 = use train.epochs
  int bootstrap_replicates = 500;
  AnalysisToggles analyses;

  BodyTemplate body_template() const {
    BodyTemplate t = make_body_template(template_rings, template_segments);
    t.height_mm = template_height_mm;
    t.radius_scale_mm = template_radius_scale_mm;
    t.stature_scale = template_stature_scale;
    t.obesity_scale = template_obesity_scale;
    t.hip_waist_scale = template_hip_waist_scale;
    return t;
  }

  void validate() const {
    if (!seed_set) throw ConfigError("seed is mandatory (config key 'seed' or --seed)");
    if (cohort_n < 1) throw ConfigError("cohort.n must be at least 1");
    if (bootstrap_replicates < 100)
      throw ConfigError("bootstrap.replicates must be at least 100");
    dgp.validate();
    train.validate();
    body_template();
  }
};

namespace detail {

struct ConfigKeyTable {
  std::map<std::string, double*> doubles;
  std::map<std::string, int*> ints;
  std::map<std::string, bool*> bools;
  std::map<std::string, std::vector<int>*> int_lists;
};

inline ConfigKeyTable config_keys(RunConfig& c) {
  ConfigKeyTable t;
  t.ints = {
      {"cohort.n", &c.cohort_n},
      {"template.rings", &c.template_rings},
      {"template.segments", &c.template_segments},
      {"train.embedding_dim", &c.train.embedding_dim},
      {"train.epochs", &c.train.epochs},
      {"train.batch_size", &c.train.batch_size},
      {"sweep.epochs", &c.sweep_epochs},
      {"bootstrap.replicates", &c.bootstrap_replicates},
  };
  t.doubles = {
      {"template.height_mm", &c.template_height_mm},
      {"template.radius_scale_mm", &c.template_radius_scale_mm},
      {"template.stature_scale", &c.template_stature_scale},
      {"template.obesity_scale", &c.template_obesity_scale},
      {"template.hip_waist_scale", &c.template_hip_waist_scale},
      {"train.learning_rate", &c.train.learning_rate},
      {"train.rms_decay", &c.train.rms_decay},
      {"train.rms_epsilon", &c.train.rms_epsilon},
      {"train.split_fraction", &c.train.split_fraction},
      {"dgp.alpha_intercept", &c.dgp.alpha_intercept},
      {"dgp.alpha_education", &c.dgp.alpha_education},
      {"dgp.alpha_experience", &c.dgp.alpha_experience},
      {"dgp.alpha_experience2", &c.dgp.alpha_experience2},
      {"dgp.alpha_children", &c.dgp.alpha_children},
      {"dgp.alpha_fitness", &c.dgp.alpha_fitness},
      {"dgp.beta_stature", &c.dgp.beta_stature},
      {"dgp.beta_obesity", &c.dgp.beta_obesity},
      {"dgp.beta_hip_waist", &c.dgp.beta_hip_waist},
      {"dgp.income_noise_sd", &c.dgp.income_noise_sd},
      {"dgp.kappa_group0", &c.dgp.kappa_group0},
      {"dgp.kappa_group1", &c.dgp.kappa_group1},
      {"dgp.lambda_ability", &c.dgp.lambda_ability},
      {"dgp.gamma_shoe", &c.dgp.gamma_shoe},
      {"dgp.gamma_jacket", &c.dgp.gamma_jacket},
      {"dgp.gamma_pants", &c.dgp.gamma_pants},
      {"dgp.shoe_pref_sd", &c.dgp.shoe_pref_sd},
      {"dgp.jacket_pref_sd", &c.dgp.jacket_pref_sd},
      {"dgp.pants_pref_sd", &c.dgp.pants_pref_sd},
      {"dgp.shoe_intercept", &c.dgp.shoe_intercept},
      {"dgp.shoe_anchor_coef", &c.dgp.shoe_anchor_coef},
      {"dgp.jacket_intercept", &c.dgp.jacket_intercept},
      {"dgp.jacket_anchor_coef", &c.dgp.jacket_anchor_coef},
      {"dgp.pants_intercept", &c.dgp.pants_intercept},
      {"dgp.pants_anchor_coef", &c.dgp.pants_anchor_coef},
      {"dgp.hip_waist_sd_group0", &c.dgp.hip_waist_sd_group0},
      {"dgp.hip_waist_sd_group1", &c.dgp.hip_waist_sd_group1},
      {"dgp.female_fraction", &c.dgp.female_fraction},
      {"dgp.rep_height_intercept", &c.dgp.rep_height_intercept},
      {"dgp.rep_height_income", &c.dgp.rep_height_income},
      {"dgp.rep_height_age2", &c.dgp.rep_height_age2},
      {"dgp.rep_height_noise_sd", &c.dgp.rep_height_noise_sd},
      {"dgp.rep_weight_intercept", &c.dgp.rep_weight_intercept},
      {"dgp.rep_weight_weight", &c.dgp.rep_weight_weight},
      {"dgp.rep_weight_fitness", &c.dgp.rep_weight_fitness},
      {"dgp.rep_weight_noise_sd", &c.dgp.rep_weight_noise_sd},
      {"dgp.mesh_noise_sd", &c.dgp.mesh_noise_sd},
      {"dgp.body_density", &c.dgp.body_density},
  };
  t.bools = {
      {"train.per_group", &c.train_per_group},
      {"analysis.summary", &c.analyses.summary},
      {"analysis.reporting_errors", &c.analyses.reporting_errors},
      {"analysis.kernel_curves", &c.analyses.kernel_curves},
      {"analysis.quantile_curves", &c.analyses.quantile_curves},
      {"analysis.income_conventional", &c.analyses.income_conventional},
      {"analysis.body_measures", &c.analyses.body_measures},
      {"analysis.lasso", &c.analyses.lasso},
      {"analysis.embedding_regressions", &c.analyses.embedding_regressions},
      {"analysis.embedding_measure_fits", &c.analyses.embedding_measure_fits},
      {"analysis.proxy", &c.analyses.proxy},
      {"analysis.control_function", &c.analyses.control_function},
      {"analysis.sweep", &c.analyses.sweep},
      {"analysis.comparison", &c.analyses.comparison},
  };
  t.int_lists = {
      {"train.hidden_widths", &c.train.hidden_widths},
      {"sweep.d_values", &c.sweep_d_values},
  };
  return t;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, int line_no) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("line " + std::to_string(line_no) + ": bad boolean '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& v, int line_no) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty list item");
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad integer '" + item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("line " + std::to_string(line_no) + ": empty list");
  return out;
}

}  // namespace detail

// Flat key=value config. '#' starts a comment; blank lines ignored; unknown
// and duplicate keys are errors.
inline RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  RunConfig cfg;
  detail::ConfigKeyTable keys = detail::config_keys(cfg);
  std::map<std::string, int> seen;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first at line " + std::to_string(seen[key]) + ")");
    seen[key] = line_no;

    try {
      if (key == "seed") {
        cfg.seed = std::stoull(value);
        cfg.seed_set = true;
      } else if (key == "out") {
        cfg.out_dir = value;
      } else if (auto it = keys.doubles.find(key); it != keys.doubles.end()) {
        *it->second = std::stod(value);
      } else if (auto it2 = keys.ints.find(key); it2 != keys.ints.end()) {
        *it2->second = std::stoi(value);
      } else if (auto it3 = keys.bools.find(key); it3 != keys.bools.end()) {
        *it3->second = detail::parse_bool(value, line_no);
      } else if (auto it4 = keys.int_lists.find(key); it4 != keys.int_lists.end()) {
        *it4->second = detail::parse_int_list(value, line_no);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown config key '" +
                          key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value '" + value +
                        "' for key '" + key + "'");
    }
  }
  // train seed follows the master seed unless the caller overrides later.
  cfg.train.seed = cfg.seed;
  return cfg;
}

}  // namespace anthro
