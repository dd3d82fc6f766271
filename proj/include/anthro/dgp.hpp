#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "anthro/body_template.hpp"
#include "anthro/errors.hpp"
#include "anthro/measures.hpp"
#include "anthro/rng.hpp"

namespace anthro {

// Categorical codes. Code 0 is the reference category used when expanding to
// indicator columns.
enum class Race { White = 0, Hispanic = 1, Black = 2, Asian = 3 };
enum class Occupation { WhiteCollar = 0, Management = 1, BlueCollar = 2, Service = 3 };
enum class Marital { Single = 0, Married = 1, DivorcedWidowed = 2 };
enum class BirthRegion { Midwest = 0, Foreign = 1, Northeast = 2, South = 3, West = 4 };

inline const std::vector<std::string>& race_labels() {
  static const std::vector<std::string> v{"White", "Hispanic", "Black", "Asian"};
  return v;
}
inline const std::vector<std::string>& occupation_labels() {
  static const std::vector<std::string> v{"WhiteCollar", "Management", "BlueCollar", "Service"};
  return v;
}
inline const std::vector<std::string>& marital_labels() {
  static const std::vector<std::string> v{"Single", "Married", "DivWid"};
  return v;
}
inline const std::vector<std::string>& region_labels() {
  static const std::vector<std::string> v{"Midwest", "Foreign", "Northeast", "South", "West"};
  return v;
}

// All coefficients of the synthetic data-generating process. The structural
// income equation is
//   log_income = alpha'X + b1*stature + b2*obesity + b3*hip_waist
//                + lambda_ability*ability + eps
// and the stature latent is
//   stature = kappa*ability + g_shoe*D_shoe + g_jacket*D_jacket
//             + g_pants*D_pants + sigma_nu*eps_s
// where the D_* shocks also drive the garment sizes. sigma_nu is derived per
// group so that var(stature) = 1 whenever kappa^2 + sum(g^2 sd^2) <= 1.
struct DGPConfig {
  // Structural income equation.
  double alpha_intercept = 10.10;
  double alpha_education = 0.050;
  double alpha_experience = 0.020;
  double alpha_experience2 = -0.00040;
  double alpha_children = 0.020;
  double alpha_fitness = 0.010;
  std::array<double, 4> alpha_race{0.0, -0.05, -0.08, -0.02};
  std::array<double, 4> alpha_occupation{0.0, 0.15, -0.10, -0.12};
  std::array<double, 3> alpha_marital{0.0, 0.12, 0.02};
  std::array<double, 5> alpha_region{0.0, -0.04, 0.05, -0.03, 0.01};
  double beta_stature = 0.050;
  double beta_obesity = -0.060;
  double beta_hip_waist = 0.010;
  double income_noise_sd = 0.30;

  // Confounding: ability loads on stature (per group) and on the income error.
  double kappa_group0 = 0.0;
  double kappa_group1 = 0.8;
  double lambda_ability = 0.30;

  // Garment-size determinants: loadings into the stature latent and the SDs
  // of the preference shocks.
  double gamma_shoe = 0.30;
  double gamma_jacket = 0.30;
  double gamma_pants = 0.30;
  double shoe_pref_sd = 1.0;
  double jacket_pref_sd = 1.0;
  double pants_pref_sd = 1.0;

  // Garment sizes regress on their anatomical anchors.
  double shoe_intercept = 2.0;
  double shoe_anchor_coef = 0.040;    // on foot length (mm)
  double jacket_intercept = -10.0;
  double jacket_anchor_coef = 0.050;  // on chest circumference (mm)
  double pants_intercept = -14.0;
  double pants_anchor_coef = 0.050;   // on waist circumference (mm)

  // Hip-waist latent SD per group; group 1 has the full third factor.
  double hip_waist_sd_group0 = 0.15;
  double hip_waist_sd_group1 = 1.0;
  double female_fraction = 0.5;  // share of group 1

  // Reporting errors.
  //   reported_height = height + c0 + c_inc*log_income + c_age2*age^2 + eta_H
  //   reported_weight = weight + d0 + d_w*weight + d_fit*fitness + eta_W
  double rep_height_intercept = 85.0;
  double rep_height_income = -8.0;
  double rep_height_age2 = 0.010;
  double rep_height_noise_sd = 25.0;
  double rep_weight_intercept = 4.3;
  double rep_weight_weight = -0.050;
  double rep_weight_fitness = -0.040;
  double rep_weight_noise_sd = 2.0;

  // Mesh generation.
  double mesh_noise_sd = 2.0;       // mm
  double body_density = 985.0;      // kg/m^3

  double kappa(int group) const { return group == 0 ? kappa_group0 : kappa_group1; }
  double hip_waist_sd(int group) const {
    return group == 0 ? hip_waist_sd_group0 : hip_waist_sd_group1;
  }

  double instrument_variance() const {
    return gamma_shoe * gamma_shoe * shoe_pref_sd * shoe_pref_sd +
           gamma_jacket * gamma_jacket * jacket_pref_sd * jacket_pref_sd +
           gamma_pants * gamma_pants * pants_pref_sd * pants_pref_sd;
  }
  // Residual stature noise keeping var(stature) = 1 where feasible.
  double stature_noise_sd(int group) const {
    double k = kappa(group);
    return std::sqrt(std::max(0.0, 1.0 - k * k - instrument_variance()));
  }
  // SD of the non-ability stature component u = s - kappa*ability.
  double sigma_u(int group) const {
    double nu = stature_noise_sd(group);
    return std::sqrt(instrument_variance() + nu * nu);
  }
  // Population corr(stature, ability) = kappa / sqrt(kappa^2 + sigma_u^2).
  double stature_ability_corr(int group) const {
    double k = kappa(group), su = sigma_u(group);
    double denom = std::sqrt(k * k + su * su);
    return denom > 0.0 ? k / denom : 0.0;
  }
  // Probability limit of the bias on the stature coefficient when ability is
  // omitted from OLS: lambda * kappa / (kappa^2 + sigma_u^2).
  double omitted_variable_bias(int group) const {
    double k = kappa(group), su = sigma_u(group);
    return lambda_ability * k / (k * k + su * su);
  }
  // Weight at which the mean reporting error in weight crosses zero,
  // holding fitness at its population mean.
  double weight_error_crossing(double mean_fitness) const {
    return (rep_weight_intercept + rep_weight_fitness * mean_fitness) /
           (-rep_weight_weight);
  }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    const double all[] = {alpha_intercept, alpha_education, alpha_experience,
                          alpha_experience2, alpha_children, alpha_fitness,
                          beta_stature, beta_obesity, beta_hip_waist,
                          income_noise_sd, kappa_group0, kappa_group1,
                          lambda_ability, gamma_shoe, gamma_jacket, gamma_pants,
                          shoe_pref_sd, jacket_pref_sd, pants_pref_sd,
                          shoe_intercept, shoe_anchor_coef, jacket_intercept,
                          jacket_anchor_coef, pants_intercept, pants_anchor_coef,
                          hip_waist_sd_group0, hip_waist_sd_group1,
                          female_fraction, rep_height_intercept,
                          rep_height_income, rep_height_age2,
                          rep_height_noise_sd, rep_weight_intercept,
                          rep_weight_weight, rep_weight_fitness,
                          rep_weight_noise_sd, mesh_noise_sd, body_density};
    for (double v : all)
      if (!finite(v)) throw ConfigError("DGP config contains a non-finite value");
    for (double v : {alpha_race[0], alpha_race[1], alpha_race[2], alpha_race[3],
                     alpha_occupation[0], alpha_occupation[1], alpha_occupation[2],
                     alpha_occupation[3], alpha_marital[0], alpha_marital[1],
                     alpha_marital[2], alpha_region[0], alpha_region[1],
                     alpha_region[2], alpha_region[3], alpha_region[4]})
      if (!finite(v)) throw ConfigError("DGP config contains a non-finite value");
    if (income_noise_sd < 0 || shoe_pref_sd < 0 || jacket_pref_sd < 0 ||
        pants_pref_sd < 0 || hip_waist_sd_group0 < 0 || hip_waist_sd_group1 < 0 ||
        rep_height_noise_sd < 0 || rep_weight_noise_sd < 0 || mesh_noise_sd < 0)
      throw ConfigError("DGP noise SDs must be non-negative");
    if (!(body_density > 0)) throw ConfigError("body density must be positive");
    if (female_fraction < 0 || female_fraction > 1)
      throw ConfigError("female_fraction must lie in [0,1]");
  }
};

// One synthetic subject. `ability` and the garment determinants are hidden
// structural shocks retained for oracle checks only.
struct SubjectRecord {
  int id = 0;
  int group = 0;  // 0/1 subpopulation label (gates kappa and the third latent)
  LatentBody latent;
  double ability = 0.0;
  double shoe_det = 0.0;
  double jacket_det = 0.0;
  double pants_det = 0.0;
  BodyMeasures measures;
  double reported_height_mm = 0.0;
  double reported_weight_kg = 0.0;
  double log_income = 0.0;
  double education_years = 0.0;
  double experience_years = 0.0;
  double age_years = 0.0;
  double fitness_hours = 0.0;
  int race = 0;
  int occupation = 0;
  int marital = 0;
  int birth_region = 0;
  int n_children = 0;
  double shoe_size = 0.0;
  double pants_size = 0.0;
  double jacket_size = 0.0;

  double bmi_measured() const { return bmi(measures.weight_kg, measures.height_mm); }
  double bmi_reported() const { return bmi(reported_weight_kg, reported_height_mm); }
  double hip_waist_measured() const {
    return hip_to_waist_ratio(measures.hip_circ_mm, measures.waist_circ_mm);
  }
  double reporting_error_height() const {
    return reported_height_mm - measures.height_mm;
  }
  double reporting_error_weight() const {
    return reported_weight_kg - measures.weight_kg;
  }
};

struct Cohort {
  std::vector<SubjectRecord> subjects;
  BodyTemplate template_info;
  DGPConfig dgp;
  std::uint64_t seed = 0;

  int size() const { return int(subjects.size()); }
};

// Reporting-error equations applied to the true measures. Exposed separately
// so the error process can be tested in isolation.
inline std::pair<double, double> apply_reporting_errors(const SubjectRecord& subject,
                                                        const DGPConfig& config,
                                                        Rng& rng) {
  config.validate();
  double reported_height = subject.measures.height_mm +
                           config.rep_height_intercept +
                           config.rep_height_income * subject.log_income +
                           config.rep_height_age2 * subject.age_years * subject.age_years +
                           rng.normal(0.0, config.rep_height_noise_sd);
  double reported_weight = subject.measures.weight_kg +
                           config.rep_weight_intercept +
                           config.rep_weight_weight * subject.measures.weight_kg +
                           config.rep_weight_fitness * subject.fitness_hours +
                           rng.normal(0.0, config.rep_weight_noise_sd);
  return {reported_height, reported_weight};
}

namespace detail {

// RNG stream tags; subject streams are derived from (seed, tag, subject id)
// so generation order and parallelism never change the cohort.
inline constexpr std::uint64_t kSubjectTag = 0x53554231ULL;
inline constexpr std::uint64_t kMeshTag = 0x4d455348ULL;

inline SubjectRecord sample_subject(int id, const DGPConfig& cfg,
                                    const BodyTemplate& tmpl, std::uint64_t seed) {
  Rng rng(derive_stream(seed, kSubjectTag, std::uint64_t(id)));
  SubjectRecord s;
  s.id = id;
  s.group = rng.uniform01() < cfg.female_fraction ? 1 : 0;
  s.ability = rng.normal();

  s.shoe_det = rng.normal(0.0, cfg.shoe_pref_sd);
  s.jacket_det = rng.normal(0.0, cfg.jacket_pref_sd);
  s.pants_det = rng.normal(0.0, cfg.pants_pref_sd);

  s.latent.stature = cfg.kappa(s.group) * s.ability + cfg.gamma_shoe * s.shoe_det +
                     cfg.gamma_jacket * s.jacket_det + cfg.gamma_pants * s.pants_det +
                     cfg.stature_noise_sd(s.group) * rng.normal();
  s.latent.obesity = rng.normal();
  s.latent.hip_waist = rng.normal(0.0, cfg.hip_waist_sd(s.group));

  // Demographics, independent of the latents and of ability.
  s.age_years = std::clamp(rng.normal(40.0, 12.0), 18.0, 65.0);
  s.education_years = std::clamp(std::round(rng.normal(16.0, 2.5)), 12.0, 24.0);
  s.experience_years = std::max(0.0, s.age_years - s.education_years - 6.0);
  s.fitness_hours = std::clamp(std::exp(rng.normal(1.1, 0.6)), 0.5, 10.0);
  s.n_children = std::min(rng.poisson(1.15), 7);
  s.race = rng.categorical({0.83, 0.02, 0.09, 0.06});
  s.occupation = rng.categorical({0.60, 0.19, 0.12, 0.09});
  s.marital = rng.categorical({0.31, 0.61, 0.08});
  s.birth_region = rng.categorical({0.36, 0.17, 0.14, 0.15, 0.18});

  RegisteredMesh mesh = mesh_from_latents(
      s.latent, tmpl, cfg.mesh_noise_sd,
      derive_stream(seed, kMeshTag, std::uint64_t(id)));
  s.measures = derive_measures(mesh, tmpl, cfg.body_density);

  s.log_income = cfg.alpha_intercept + cfg.alpha_education * s.education_years +
                 cfg.alpha_experience * s.experience_years +
                 cfg.alpha_experience2 * s.experience_years * s.experience_years +
                 cfg.alpha_children * s.n_children +
                 cfg.alpha_fitness * s.fitness_hours + cfg.alpha_race[s.race] +
                 cfg.alpha_occupation[s.occupation] + cfg.alpha_marital[s.marital] +
                 cfg.alpha_region[s.birth_region] +
                 cfg.beta_stature * s.latent.stature +
                 cfg.beta_obesity * s.latent.obesity +
                 cfg.beta_hip_waist * s.latent.hip_waist +
                 cfg.lambda_ability * s.ability +
                 rng.normal(0.0, cfg.income_noise_sd);

  s.shoe_size = cfg.shoe_intercept + cfg.shoe_anchor_coef * s.measures.foot_length_mm +
                s.shoe_det;
  s.jacket_size = cfg.jacket_intercept +
                  cfg.jacket_anchor_coef * s.measures.chest_circ_mm + s.jacket_det;
  s.pants_size = cfg.pants_intercept +
                 cfg.pants_anchor_coef * s.measures.waist_circ_mm + s.pants_det;

  auto [rh, rw] = apply_reporting_errors(s, cfg, rng);
  s.reported_height_mm = rh;
  s.reported_weight_kg = rw;
  return s;
}

}  // namespace detail

// Regenerating a mesh for one subject (the cohort stores meshes on disk, not
// in memory; this reproduces them bit-exactly).
inline RegisteredMesh subject_mesh(const Cohort& cohort, const SubjectRecord& s) {
  return mesh_from_latents(
      s.latent, cohort.template_info, cohort.dgp.mesh_noise_sd,
      derive_stream(cohort.seed, detail::kMeshTag, std::uint64_t(s.id)));
}

inline Cohort sample_cohort(int n, const DGPConfig& config,
                            const BodyTemplate& tmpl, std::uint64_t seed) {
  if (n < 1) throw ConfigError("empty cohort: n must be at least 1");
  config.validate();
  Cohort cohort;
  cohort.template_info = tmpl;
  cohort.dgp = config;
  cohort.seed = seed;
  cohort.subjects.reserve(n);
  for (int i = 0; i < n; ++i)
    cohort.subjects.push_back(detail::sample_subject(i, config, tmpl, seed));
  return cohort;
}

// Ten income classes spanning $7,500 to $150,000, log-spaced midpoints.
inline const std::vector<double>& income_class_midpoints() {
  static const std::vector<double> mids = [] {
    std::vector<double> v(10);
    double lo = std::log(7500.0), hi = std::log(150000.0);
    for (int i = 0; i < 10; ++i)
      v[i] = std::exp(lo + (hi - lo) * double(i) / 9.0);
    return v;
  }();
  return mids;
}

// Maps continuous log income to the nearest class midpoint in log space.
inline double discretize_log_income(double log_income) {
  const auto& mids = income_class_midpoints();
  double best = std::log(mids[0]);
  for (double m : mids) {
    double lm = std::log(m);
    if (std::abs(lm - log_income) < std::abs(best - log_income)) best = lm;
  }
  return best;
}

}  // namespace anthro
