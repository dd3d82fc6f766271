#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anthro/errors.hpp"
#include "anthro/mesh.hpp"
#include "anthro/rng.hpp"

namespace anthro {

enum class Activation : int { Relu = 0, Linear = 1 };

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::Relu;
};

struct Layer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim
  Activation activation = Activation::Relu;

  LayerSpec spec() const {
    return {int(weights.cols()), int(weights.rows()), activation};
  }
};

// Hour-glass multilayer perceptron over flattened mesh coordinates. Hidden
// layers are ReLU; the terminal layer of both halves is linear. The embedding
// is the encoder output.
struct AutoencoderModel {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;

  int input_dim() const { return int(encoder.front().weights.cols()); }
  int embedding_dim() const { return int(encoder.back().weights.rows()); }

  void validate() const {
    if (encoder.empty() || decoder.empty())
      throw ConfigError("autoencoder needs at least one layer per half");
    auto check_chain = [](const std::vector<Layer>& layers, const char* half) {
      for (std::size_t i = 0; i + 1 < layers.size(); ++i)
        if (layers[i].weights.rows() != layers[i + 1].weights.cols())
          throw ConfigError(std::string("dimension mismatch between ") + half +
                            " layers " + std::to_string(i) + " and " +
                            std::to_string(i + 1));
      for (const auto& l : layers) {
        if (l.weights.rows() < 1 || l.weights.cols() < 1)
          throw ConfigError("layer dimensions must be at least 1");
        if (l.bias.size() != l.weights.rows())
          throw ConfigError("bias length does not match layer output dim");
      }
    };
    check_chain(encoder, "encoder");
    check_chain(decoder, "decoder");
    if (encoder.back().weights.rows() != decoder.front().weights.cols())
      throw ConfigError("embedding dim mismatch between encoder and decoder");
    if (decoder.back().weights.rows() != encoder.front().weights.cols())
      throw ConfigError("decoder output dim must equal input dim");
    if (encoder.back().activation != Activation::Linear ||
        decoder.back().activation != Activation::Linear)
      throw ConfigError("terminal layers must be linear");
  }
};

// Symmetric architecture input -> hidden... -> d -> ...hidden -> input.
inline AutoencoderModel make_autoencoder(int input_dim,
                                         const std::vector<int>& hidden_widths,
                                         int embedding_dim) {
  if (input_dim < 1 || embedding_dim < 1)
    throw ConfigError("autoencoder dims must be at least 1");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be at least 1");

  AutoencoderModel model;
  auto add = [](std::vector<Layer>& half, int in, int out, Activation act) {
    Layer l;
    l.weights = Eigen::MatrixXd::Zero(out, in);
    l.bias = Eigen::VectorXd::Zero(out);
    l.activation = act;
    half.push_back(std::move(l));
  };
  int prev = input_dim;
  for (int w : hidden_widths) {
    add(model.encoder, prev, w, Activation::Relu);
    prev = w;
  }
  add(model.encoder, prev, embedding_dim, Activation::Linear);
  prev = embedding_dim;
  for (auto it = hidden_widths.rbegin(); it != hidden_widths.rend(); ++it) {
    add(model.decoder, prev, *it, Activation::Relu);
    prev = *it;
  }
  add(model.decoder, prev, input_dim, Activation::Linear);
  return model;
}

// Uniform on [-sqrt(6/(fan_in+fan_out)), +sqrt(...)], biases zero; fill order
// is row-major per layer, encoder first, so init is reproducible per seed.
inline void init_parameters(AutoencoderModel& model, std::uint64_t seed) {
  Rng rng(seed);
  auto init_half = [&rng](std::vector<Layer>& half) {
    for (auto& l : half) {
      double a = std::sqrt(6.0 / double(l.weights.rows() + l.weights.cols()));
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
          l.weights(r, c) = rng.uniform(-a, a);
      l.bias.setZero();
    }
  };
  init_half(model.encoder);
  init_half(model.decoder);
}

namespace detail {

inline void apply_activation(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::Relu) z = z.cwiseMax(0.0);
}

// Columns are samples.
inline Eigen::MatrixXd run_layers(const std::vector<Layer>& layers,
                                  const Eigen::MatrixXd& input) {
  Eigen::MatrixXd h = input;
  for (const auto& l : layers) {
    Eigen::MatrixXd z = (l.weights * h).colwise() + l.bias;
    apply_activation(z, l.activation);
    h = std::move(z);
  }
  return h;
}

}  // namespace detail

inline Eigen::MatrixXd encode_batch(const AutoencoderModel& model,
                                    const Eigen::MatrixXd& x) {
  if (x.rows() != model.input_dim())
    throw DataError("input dim mismatch: " + std::to_string(x.rows()) + " vs " +
                    std::to_string(model.input_dim()));
  return detail::run_layers(model.encoder, x);
}

inline Eigen::MatrixXd decode_batch(const AutoencoderModel& model,
                                    const Eigen::MatrixXd& p) {
  if (p.rows() != model.embedding_dim())
    throw DataError("embedding dim mismatch");
  return detail::run_layers(model.decoder, p);
}

struct ForwardResult {
  Eigen::VectorXd embedding;
  Eigen::VectorXd reconstruction;
};

inline ForwardResult forward(const AutoencoderModel& model, const Eigen::VectorXd& x) {
  Eigen::MatrixXd p = encode_batch(model, x);
  Eigen::MatrixXd r = decode_batch(model, p);
  return {p.col(0), r.col(0)};
}

// Mean over the batch of mean-squared coordinate error.
inline double reconstruction_loss(const AutoencoderModel& model,
                                  const Eigen::MatrixXd& batch) {
  if (batch.cols() == 0) throw DataError("empty batch");
  Eigen::MatrixXd recon = decode_batch(model, encode_batch(model, batch));
  return (recon - batch).squaredNorm() / double(batch.size());
}

struct Gradients {
  // Full stack order: encoder layers then decoder layers.
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_bias;
};

struct BackpropResult {
  double loss = 0.0;
  Gradients grads;
};

// Analytic gradients of reconstruction_loss by backpropagation. The ReLU
// subgradient at exactly 0 is taken as 0.
inline BackpropResult gradients(const AutoencoderModel& model,
                                const Eigen::MatrixXd& batch) {
  if (batch.cols() == 0) throw DataError("empty batch");
  if (batch.rows() != model.input_dim())
    throw DataError("input dim mismatch in gradients()");

  std::vector<const Layer*> stack;
  for (const auto& l : model.encoder) stack.push_back(&l);
  for (const auto& l : model.decoder) stack.push_back(&l);
  const std::size_t L = stack.size();

  // Forward, keeping post-activation values per layer boundary.
  std::vector<Eigen::MatrixXd> activations(L + 1);
  activations[0] = batch;
  for (std::size_t i = 0; i < L; ++i) {
    Eigen::MatrixXd z = (stack[i]->weights * activations[i]).colwise() + stack[i]->bias;
    detail::apply_activation(z, stack[i]->activation);
    activations[i + 1] = std::move(z);
  }

  BackpropResult result;
  const double denom = double(batch.size());
  Eigen::MatrixXd diff = activations[L] - batch;
  result.loss = diff.squaredNorm() / denom;

  result.grads.d_weights.resize(L);
  result.grads.d_bias.resize(L);
  Eigen::MatrixXd delta = diff * (2.0 / denom);
  for (std::size_t i = L; i-- > 0;) {
    if (stack[i]->activation == Activation::Relu)
      delta = delta.cwiseProduct(
          (activations[i + 1].array() > 0.0).cast<double>().matrix());
    result.grads.d_weights[i].noalias() = delta * activations[i].transpose();
    result.grads.d_bias[i] = delta.rowwise().sum();
    if (i > 0) delta = stack[i]->weights.transpose() * delta;
  }
  return result;
}

struct RmspropState {
  std::vector<Eigen::MatrixXd> weight_cache;
  std::vector<Eigen::VectorXd> bias_cache;
};

inline RmspropState make_rmsprop_state(const AutoencoderModel& model) {
  RmspropState st;
  for (const auto* half : {&model.encoder, &model.decoder})
    for (const auto& l : *half) {
      st.weight_cache.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      st.bias_cache.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  return st;
}

// cache <- decay*cache + (1-decay)*g^2;  theta <- theta - lr*g/(sqrt(cache)+eps)
inline void rmsprop_step(AutoencoderModel& model, RmspropState& state,
                         const Gradients& grads, double lr, double decay,
                         double epsilon) {
  std::vector<Layer*> stack;
  for (auto* half : {&model.encoder, &model.decoder})
    for (auto& l : *half) stack.push_back(&l);
  if (grads.d_weights.size() != stack.size() ||
      state.weight_cache.size() != stack.size())
    throw DataError("gradient/state shape mismatch in rmsprop_step");

  for (std::size_t i = 0; i < stack.size(); ++i) {
    auto& wc = state.weight_cache[i];
    wc.array() = decay * wc.array() + (1.0 - decay) * grads.d_weights[i].array().square();
    stack[i]->weights.array() -=
        lr * grads.d_weights[i].array() / (wc.array().sqrt() + epsilon);
    auto& bc = state.bias_cache[i];
    bc.array() = decay * bc.array() + (1.0 - decay) * grads.d_bias[i].array().square();
    stack[i]->bias.array() -=
        lr * grads.d_bias[i].array() / (bc.array().sqrt() + epsilon);
  }
}

}  // namespace anthro
