#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "anthro/autoencoder.hpp"
#include "anthro/errors.hpp"

namespace anthro {

// Versioned binary model format, little-endian:
//   magic "GAE1"
//   u32 n_encoder_layers, u32 n_decoder_layers
//   per layer (encoder first): u32 in_dim, u32 out_dim, u32 activation
//   per layer (encoder first): f64 weights row-major, then f64 bias
namespace detail {

inline void require_little_endian() {
  const std::uint16_t probe = 1;
  if (*reinterpret_cast<const std::uint8_t*>(&probe) != 1)
    throw NumericalError("GAE1 files require a little-endian host");
}

inline void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace detail

inline void save_model(const std::filesystem::path& path, const AutoencoderModel& model) {
  detail::require_little_endian();
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out.write("GAE1", 4);
  detail::write_u32(out, std::uint32_t(model.encoder.size()));
  detail::write_u32(out, std::uint32_t(model.decoder.size()));
  for (const auto* half : {&model.encoder, &model.decoder})
    for (const auto& l : *half) {
      detail::write_u32(out, std::uint32_t(l.weights.cols()));
      detail::write_u32(out, std::uint32_t(l.weights.rows()));
      detail::write_u32(out, std::uint32_t(l.activation));
    }
  for (const auto* half : {&model.encoder, &model.decoder})
    for (const auto& l : *half) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
          double v = l.weights(r, c);
          out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
      out.write(reinterpret_cast<const char*>(l.bias.data()),
                std::streamsize(sizeof(double)) * l.bias.size());
    }
  out.close();
  if (out.fail()) throw DataError("write failed: " + path.string());
}

inline AutoencoderModel load_model(const std::filesystem::path& path) {
  detail::require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GAE1", 4) != 0)
    throw DataError("not a GAE1 model file: " + path.string());
  std::uint32_t n_enc = detail::read_u32(in);
  std::uint32_t n_dec = detail::read_u32(in);
  if (!in || n_enc == 0 || n_dec == 0 || n_enc > 64 || n_dec > 64)
    throw DataError("corrupt GAE1 header: " + path.string());

  AutoencoderModel model;
  auto read_specs = [&](std::vector<Layer>& half, std::uint32_t count) {
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint32_t in_dim = detail::read_u32(in);
      std::uint32_t out_dim = detail::read_u32(in);
      std::uint32_t act = detail::read_u32(in);
      if (!in || in_dim == 0 || out_dim == 0 || act > 1)
        throw DataError("corrupt GAE1 layer spec: " + path.string());
      Layer l;
      l.weights = Eigen::MatrixXd::Zero(out_dim, in_dim);
      l.bias = Eigen::VectorXd::Zero(out_dim);
      l.activation = Activation(act);
      half.push_back(std::move(l));
    }
  };
  read_specs(model.encoder, n_enc);
  read_specs(model.decoder, n_dec);

  for (auto* half : {&model.encoder, &model.decoder})
    for (auto& l : *half) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
          double v = 0.0;
          in.read(reinterpret_cast<char*>(&v), sizeof(v));
          l.weights(r, c) = v;
        }
      in.read(reinterpret_cast<char*>(l.bias.data()),
              std::streamsize(sizeof(double)) * l.bias.size());
    }
  if (!in) throw DataError("truncated GAE1 file: " + path.string());
  model.validate();
  return model;
}

}  // namespace anthro
