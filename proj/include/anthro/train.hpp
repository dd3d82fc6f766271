#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "anthro/autoencoder.hpp"
#include "anthro/errors.hpp"
#include "anthro/mesh.hpp"
#include "anthro/stats.hpp"

namespace anthro {

struct TrainConfig {
  int embedding_dim = 3;
  int epochs = 500;
  int batch_size = 100;
  double learning_rate = 1e-3;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  double split_fraction = 0.8;
  std::uint64_t seed = 1;
  std::vector<int> hidden_widths = {256, 64, 16};

  void validate() const {
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
      throw ConfigError("split_fraction must lie in (0,1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(rms_decay >= 0.0 && rms_decay < 1.0))
      throw ConfigError("rms_decay must lie in [0,1)");
    if (!(rms_epsilon > 0.0)) throw ConfigError("rms_epsilon must be positive");
  }
};

// Units: m^2 per coordinate (vertices are converted to meters before training).
struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
};

struct TrainResult {
  AutoencoderModel model;
  TrainHistory history;
};

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
};

namespace detail {
inline constexpr std::uint64_t kSplitTag = 0x53504c49ULL;
inline constexpr std::uint64_t kInitTag = 0x494e4954ULL;
inline constexpr std::uint64_t kBatchTag = 0x42415443ULL;
}  // namespace detail

// Random split by seed; the same seed gives the same membership regardless of
// the embedding dimension being trained.
inline SplitIndices make_split(int n, double fraction, std::uint64_t seed) {
  if (n < 2) throw DataError("dataset too small to split");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_stream(seed, detail::kSplitTag));
  rng.shuffle(idx);
  int n_train = std::clamp(int(std::floor(fraction * n)), 1, n - 1);
  SplitIndices split;
  split.train.assign(idx.begin(), idx.begin() + n_train);
  split.val.assign(idx.begin() + n_train, idx.end());
  return split;
}

// Trains on an explicit split. Data columns are samples (flattened meshes in
// meters). Inputs are centered on the dataset mean; after training the center
// is folded into the first encoder bias and the terminal decoder bias so the
// returned model operates on raw inputs.
inline TrainResult train_on_split(const Eigen::MatrixXd& data,
                                  const SplitIndices& split,
                                  const TrainConfig& config) {
  config.validate();
  if (data.cols() == 0) throw DataError("empty dataset");
  if (split.train.empty() || split.val.empty())
    throw DataError("both split halves must be non-empty");

  const Eigen::VectorXd center = data.rowwise().mean();
  Eigen::MatrixXd train_data(data.rows(), split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i)
    train_data.col(i) = data.col(split.train[i]) - center;
  Eigen::MatrixXd val_data(data.rows(), split.val.size());
  for (std::size_t i = 0; i < split.val.size(); ++i)
    val_data.col(i) = data.col(split.val[i]) - center;

  AutoencoderModel model = make_autoencoder(int(data.rows()), config.hidden_widths,
                                            config.embedding_dim);
  init_parameters(model, derive_stream(config.seed, detail::kInitTag));
  RmspropState opt = make_rmsprop_state(model);
  Rng batch_rng(derive_stream(config.seed, detail::kBatchTag));

  const int n_train = int(train_data.cols());
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.history.train_mse.reserve(config.epochs);
  result.history.val_mse.reserve(config.epochs);

  Eigen::MatrixXd batch(data.rows(), std::min(config.batch_size, n_train));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    batch_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n_train; start += config.batch_size) {
      int b = std::min(config.batch_size, n_train - start);
      batch.resize(data.rows(), b);
      for (int i = 0; i < b; ++i) batch.col(i) = train_data.col(order[start + i]);
      BackpropResult bp = gradients(model, batch);
      epoch_loss += bp.loss * b;
      rmsprop_step(model, opt, bp.grads, config.learning_rate, config.rms_decay,
                   config.rms_epsilon);
    }
    result.history.train_mse.push_back(epoch_loss / n_train);
    result.history.val_mse.push_back(reconstruction_loss(model, val_data));
  }

  // Fold the centering into the terminal biases: encode(x) = f(x - c) and
  // decode adds c back, so the stored model needs no separate center vector.
  model.encoder.front().bias -= model.encoder.front().weights * center;
  model.decoder.back().bias += center;
  result.model = std::move(model);
  return result;
}

inline TrainResult train(const Eigen::MatrixXd& data, const TrainConfig& config) {
  if (data.cols() == 0) throw DataError("empty dataset");
  SplitIndices split = make_split(int(data.cols()), config.split_fraction, config.seed);
  return train_on_split(data, split, config);
}

inline Eigen::MatrixXd meshes_to_matrix(const std::vector<RegisteredMesh>& meshes) {
  if (meshes.empty()) throw DataError("empty mesh list");
  Eigen::MatrixXd data(3 * meshes.front().vertices.size(), meshes.size());
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    Eigen::VectorXd v = flatten(meshes[i]);
    if (v.size() != data.rows()) throw DataError("meshes differ in topology");
    data.col(i) = v;
  }
  return data;
}

inline Eigen::VectorXd encode(const AutoencoderModel& model, const RegisteredMesh& mesh) {
  return encode_batch(model, flatten(mesh)).col(0);
}

// Per-subject embedding rows plus cohort standardization constants.
struct Embedding {
  Eigen::MatrixXd raw;   // n x d
  Eigen::VectorXd mean;  // d
  Eigen::VectorXd sd;    // d, sample SD

  Eigen::MatrixXd standardized() const {
    Eigen::MatrixXd z = raw.rowwise() - mean.transpose();
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      z.col(j) /= (sd[j] > 0.0 ? sd[j] : 1.0);
    return z;
  }
};

inline Embedding compute_embedding(const AutoencoderModel& model,
                                   const Eigen::MatrixXd& data) {
  Embedding e;
  e.raw = encode_batch(model, data).transpose();
  e.mean = e.raw.colwise().mean();
  Eigen::MatrixXd centered = e.raw.rowwise() - e.mean.transpose();
  e.sd = (centered.array().square().colwise().sum() /
          std::max<double>(1.0, double(e.raw.rows() - 1)))
             .sqrt();
  return e;
}

// Assignment of embedding components to reference measures by maximal
// absolute correlation, signs flipped so each matched correlation is
// positive. Greedy one-to-one, ties broken by component then measure index.
struct ComponentAlignment {
  std::vector<int> measure_of_component;  // size d
  std::vector<double> sign;               // size d, +1 or -1

  // Columns reordered so column j is the component assigned to the j-th
  // smallest assigned measure index, sign-corrected.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& embeddings) const {
    const int d = int(measure_of_component.size());
    std::vector<int> comp(d);
    std::iota(comp.begin(), comp.end(), 0);
    std::sort(comp.begin(), comp.end(), [&](int a, int b) {
      return measure_of_component[a] < measure_of_component[b];
    });
    Eigen::MatrixXd out(embeddings.rows(), d);
    for (int j = 0; j < d; ++j)
      out.col(j) = sign[comp[j]] * embeddings.col(comp[j]);
    return out;
  }
};

inline ComponentAlignment align_components(const Eigen::MatrixXd& embeddings,
                                           const Eigen::MatrixXd& measures) {
  const int d = int(embeddings.cols()), m = int(measures.cols());
  if (m < d) throw DataError("fewer measures than embedding components");
  if (embeddings.rows() != measures.rows() || embeddings.rows() < 3)
    throw DataError("alignment needs matching rows, n >= 3");

  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(d, m);
  for (int c = 0; c < d; ++c)
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd a = embeddings.col(c), b = measures.col(j);
      double va = (a.array() - a.mean()).square().sum();
      double vb = (b.array() - b.mean()).square().sum();
      corr(c, j) = (va > 0.0 && vb > 0.0) ? correlation(a, b) : 0.0;
    }

  ComponentAlignment align;
  align.measure_of_component.assign(d, -1);
  align.sign.assign(d, 1.0);
  std::vector<bool> comp_used(d, false), meas_used(m, false);
  for (int step = 0; step < d; ++step) {
    int best_c = -1, best_m = -1;
    double best = -1.0;
    for (int c = 0; c < d; ++c) {
      if (comp_used[c]) continue;
      for (int j = 0; j < m; ++j) {
        if (meas_used[j]) continue;
        if (std::abs(corr(c, j)) > best) {
          best = std::abs(corr(c, j));
          best_c = c;
          best_m = j;
        }
      }
    }
    comp_used[best_c] = true;
    meas_used[best_m] = true;
    align.measure_of_component[best_c] = best_m;
    align.sign[best_c] = corr(best_c, best_m) < 0.0 ? -1.0 : 1.0;
  }
  return align;
}

struct SweepRow {
  int embedding_dim = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

// One independent training run per requested dimension, sharing the split
// seed so membership is identical across runs.
inline std::vector<SweepRow> dim_sweep(const Eigen::MatrixXd& data,
                                       const std::vector<int>& d_values,
                                       const TrainConfig& config) {
  if (d_values.empty()) throw ConfigError("dim_sweep needs a non-empty d list");
  std::vector<SweepRow> rows;
  rows.reserve(d_values.size());
  for (int d : d_values) {
    TrainConfig cfg = config;
    cfg.embedding_dim = d;
    TrainResult r = train(data, cfg);
    rows.push_back({d, r.history.train_mse.back(), r.history.val_mse.back(),
                    cfg.epochs, cfg.seed});
  }
  return rows;
}

}  // namespace anthro
