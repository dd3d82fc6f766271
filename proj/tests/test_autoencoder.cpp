#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "anthro/autoencoder.hpp"
#include "anthro/rng.hpp"

using namespace anthro;

namespace {

AutoencoderModel random_model(int input_dim, const std::vector<int>& hidden, int d,
                              std::uint64_t seed) {
  AutoencoderModel m = make_autoencoder(input_dim, hidden, d);
  init_parameters(m, seed);
  return m;
}

// Flattened view of all parameters for finite differencing.
std::vector<double*> parameter_view(AutoencoderModel& m) {
  std::vector<double*> params;
  for (auto* half : {&m.encoder, &m.decoder})
    for (auto& l : *half) {
      for (Eigen::Index i = 0; i < l.weights.size(); ++i)
        params.push_back(l.weights.data() + i);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i)
        params.push_back(l.bias.data() + i);
    }
  return params;
}

std::vector<double> gradient_view(const AutoencoderModel& m, const Gradients& g) {
  std::vector<double> flat;
  std::size_t idx = 0;
  for (auto* half : {&m.encoder, &m.decoder})
    for (std::size_t l = 0; l < half->size(); ++l) {
      (void)l;
      const auto& dW = g.d_weights[idx];
      const auto& db = g.d_bias[idx];
      for (Eigen::Index i = 0; i < dW.size(); ++i) flat.push_back(*(dW.data() + i));
      for (Eigen::Index i = 0; i < db.size(); ++i) flat.push_back(db[i]);
      ++idx;
    }
  return flat;
}

double max_relative_gradient_error(AutoencoderModel model, const Eigen::MatrixXd& batch) {
  BackpropResult bp = gradients(model, batch);
  std::vector<double> analytic = gradient_view(model, bp.grads);
  std::vector<double*> params = parameter_view(model);
  REQUIRE(analytic.size() == params.size());
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double original = *params[i];
    *params[i] = original + h;
    double up = reconstruction_loss(model, batch);
    *params[i] = original - h;
    double down = reconstruction_loss(model, batch);
    *params[i] = original;
    double fd = (up - down) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-10});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("architecture builder produces the hour-glass layer chain") {
  AutoencoderModel m = make_autoencoder(2310, {256, 64, 16}, 3);
  m.validate();
  REQUIRE(m.encoder.size() == 4);
  REQUIRE(m.decoder.size() == 4);
  CHECK(m.input_dim() == 2310);
  CHECK(m.embedding_dim() == 3);
  CHECK(m.encoder[0].weights.rows() == 256);
  CHECK(m.encoder.back().activation == Activation::Linear);
  CHECK(m.decoder.back().activation == Activation::Linear);
  CHECK(m.encoder[0].activation == Activation::Relu);
  CHECK(m.decoder[0].weights.cols() == 3);
  CHECK(m.decoder.back().weights.rows() == 2310);
}

TEST_CASE("zero parameters map everything to zero") {
  AutoencoderModel m = make_autoencoder(5, {4}, 2);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  ForwardResult r = forward(m, x);
  CHECK(r.embedding.isZero());
  CHECK(r.reconstruction.isZero());
}

TEST_CASE("identity linear pair reconstructs the input exactly") {
  AutoencoderModel m = make_autoencoder(4, {}, 4);
  m.encoder[0].weights = Eigen::MatrixXd::Identity(4, 4);
  m.decoder[0].weights = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd x(4);
  x << 0.3, -1.2, 0.0, 2.5;
  ForwardResult r = forward(m, x);
  CHECK((r.reconstruction - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(reconstruction_loss(m, x) == 0.0);
}

TEST_CASE("hand-computed 1-2-1 forward pass matches to 1e-12") {
  AutoencoderModel m = make_autoencoder(1, {2}, 1);
  m.encoder[0].weights << 0.5, -1.0;  // 2x1
  m.encoder[0].bias << 0.1, 0.2;
  m.encoder[1].weights << 1.0, 2.0;  // 1x2
  m.encoder[1].bias << -0.3;
  m.decoder[0].weights << 1.5, 0.7;  // 2x1
  m.decoder[0].bias << 0.05, -0.05;
  m.decoder[1].weights << 0.8, -0.6;  // 1x2
  m.decoder[1].bias << 0.01;

  const double x = 0.7;
  const double h1 = std::max(0.0, 0.5 * x + 0.1);
  const double h2 = std::max(0.0, -1.0 * x + 0.2);
  const double p = 1.0 * h1 + 2.0 * h2 - 0.3;
  const double g1 = std::max(0.0, 1.5 * p + 0.05);
  const double g2 = std::max(0.0, 0.7 * p - 0.05);
  const double out = 0.8 * g1 - 0.6 * g2 + 0.01;

  Eigen::VectorXd xv(1);
  xv << x;
  ForwardResult r = forward(m, xv);
  CHECK(r.embedding[0] == Catch::Approx(p).margin(1e-12));
  CHECK(r.reconstruction[0] == Catch::Approx(out).margin(1e-12));
}

TEST_CASE("uniform reconstruction offset of one gives loss exactly one") {
  AutoencoderModel m = make_autoencoder(3, {}, 3);
  m.encoder[0].weights = Eigen::MatrixXd::Identity(3, 3);
  m.decoder[0].weights = Eigen::MatrixXd::Identity(3, 3);
  m.decoder[0].bias = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 7);
  CHECK(reconstruction_loss(m, batch) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss equals the independently summed squared error") {
  AutoencoderModel m = random_model(6, {4}, 2, 11);
  Rng rng(3);
  Eigen::MatrixXd batch(6, 1);
  for (int i = 0; i < 6; ++i) batch(i, 0) = rng.normal();
  ForwardResult r = forward(m, batch.col(0));
  double manual = 0.0;
  for (int i = 0; i < 6; ++i) {
    double diff = r.reconstruction[i] - batch(i, 0);
    manual += diff * diff;
  }
  manual /= 6.0;
  CHECK(reconstruction_loss(m, batch) == Catch::Approx(manual).margin(1e-12));
}

TEST_CASE("empty batches are rejected") {
  AutoencoderModel m = random_model(4, {3}, 2, 1);
  Eigen::MatrixXd empty(4, 0);
  CHECK_THROWS_AS(reconstruction_loss(m, empty), DataError);
  CHECK_THROWS_AS(gradients(m, empty), DataError);
}

TEST_CASE("dimension mismatches are rejected") {
  AutoencoderModel m = random_model(4, {3}, 2, 1);
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(5, 2);
  CHECK_THROWS_AS(encode_batch(m, wrong), DataError);
  CHECK_THROWS_AS(gradients(m, wrong), DataError);
}

TEST_CASE("zero input with zero biases yields zero gradients") {
  AutoencoderModel m = random_model(5, {4, 3}, 2, 7);
  for (auto* half : {&m.encoder, &m.decoder})
    for (auto& l : *half) l.bias.setZero();
  Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(5, 3);
  BackpropResult bp = gradients(m, batch);
  for (const auto& g : bp.grads.d_weights) CHECK(g.isZero());
  for (const auto& g : bp.grads.d_bias) CHECK(g.isZero());
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(5);
  AutoencoderModel m = random_model(6, {3}, 2, 21);
  Eigen::MatrixXd batch(6, 4);
  for (int i = 0; i < batch.size(); ++i) *(batch.data() + i) = rng.normal();
  CHECK(max_relative_gradient_error(m, batch) < 1e-5);
}

TEST_CASE("duplicating the batch leaves the mean gradient unchanged") {
  Rng rng(9);
  AutoencoderModel m = random_model(5, {4}, 2, 31);
  Eigen::MatrixXd batch(5, 3);
  for (int i = 0; i < batch.size(); ++i) *(batch.data() + i) = rng.normal();
  Eigen::MatrixXd doubled(5, 6);
  doubled << batch, batch;
  BackpropResult a = gradients(m, batch);
  BackpropResult b = gradients(m, doubled);
  for (std::size_t l = 0; l < a.grads.d_weights.size(); ++l) {
    CHECK((a.grads.d_weights[l] - b.grads.d_weights[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.grads.d_bias[l] - b.grads.d_bias[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rmsprop leaves parameters alone when gradients vanish") {
  AutoencoderModel m = random_model(4, {3}, 2, 41);
  AutoencoderModel before = m;
  RmspropState st = make_rmsprop_state(m);
  Gradients zero;
  for (auto* half : {&m.encoder, &m.decoder})
    for (auto& l : *half) {
      zero.d_weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      zero.d_bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  rmsprop_step(m, st, zero, 0.01, 0.9, 1e-8);
  for (std::size_t i = 0; i < m.encoder.size(); ++i)
    CHECK(m.encoder[i].weights == before.encoder[i].weights);
}

TEST_CASE("rmsprop single and repeated steps match hand evaluation") {
  // theta=0, g=1, lr=0.01, decay=0.9, eps=0:
  //   step 1: cache=0.1, delta = 0.01/sqrt(0.1)
  //   step 2: cache=0.19, delta = 0.01/sqrt(0.19)
  AutoencoderModel m = make_autoencoder(1, {}, 1);
  RmspropState st = make_rmsprop_state(m);
  Gradients g;
  g.d_weights = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
  g.d_bias = {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  rmsprop_step(m, st, g, 0.01, 0.9, 0.0);
  double step1 = -m.encoder[0].weights(0, 0);
  CHECK(step1 == Catch::Approx(0.01 / std::sqrt(0.1)).epsilon(1e-12));
  CHECK(step1 == Catch::Approx(0.031622776601683791).epsilon(1e-9));
  double w_after_1 = m.encoder[0].weights(0, 0);
  rmsprop_step(m, st, g, 0.01, 0.9, 0.0);
  double step2 = w_after_1 - m.encoder[0].weights(0, 0);
  CHECK(step2 == Catch::Approx(0.01 / std::sqrt(0.19)).epsilon(1e-12));
  CHECK(step2 == Catch::Approx(0.022941573387056174).epsilon(1e-9));
}

TEST_CASE("initialization is deterministic per seed and in range") {
  AutoencoderModel a = random_model(20, {8}, 2, 99);
  AutoencoderModel b = random_model(20, {8}, 2, 99);
  AutoencoderModel c = random_model(20, {8}, 2, 100);
  CHECK(a.encoder[0].weights == b.encoder[0].weights);
  CHECK(a.encoder[0].weights != c.encoder[0].weights);
  double bound = std::sqrt(6.0 / (20 + 8));
  CHECK(a.encoder[0].weights.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.encoder[0].bias.isZero());
}
