#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "odeaug/error.hpp"
#include "odeaug/lstm.hpp"

using namespace odeaug;

namespace {

std::vector<TimeSeries> sine_set(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TimeSeries> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double phase = rng.uniform(0, 6.28);
    Eigen::VectorXd u(200), x(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      u[i] = std::sin(0.1 * static_cast<double>(i) + phase) > 0 ? 1.0 : 0.0;
      x[i] = 10 + 5 * std::sin(0.1 * static_cast<double>(i) + phase);
    }
    out.push_back(testutil::pair_series(u, x));
  }
  return out;
}

PredictorConfig small_config() {
  PredictorConfig c;
  c.layer_sizes = {8};
  c.prediction_length = 2;
  c.input_channels = {"u", "x"};
  c.predicted_channels = {"x"};
  c.training.max_epochs = 25;
  c.training.chunk_length = 32;
  c.training.batch_size = 4;
  c.training.learning_rate = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("initialization shapes") {
  Rng rng(1);
  const auto net = LstmNetwork::initialize(3, {4, 5}, 6, rng);
  CHECK(net.input_size() == 3);
  CHECK(net.output_size() == 6);
  CHECK(net.layers[1].w_in.rows() == 20);
  CHECK(net.layers[1].w_in.cols() == 4);
  CHECK(net.parameter_count() == static_cast<std::size_t>(net.flatten().size()));
  // Forget gate bias block is 1.
  CHECK(net.layers[0].bias.segment(4, 4).isConstant(1.0));
  const double bound = 1.0 / std::sqrt(4.0);
  CHECK(net.layers[0].w_in.cwiseAbs().maxCoeff() <= bound);
  auto copy = net;
  copy.assign(Eigen::VectorXd::Zero(net.flatten().size()));
  CHECK(copy.flatten().isZero());
  CHECK_THROWS_AS(copy.assign(Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST_CASE("bptt gradient matches finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    const auto net = LstmNetwork::initialize(2, {2}, 3, rng);
    const auto batch = testutil::random_batch(2, 3, 5, 2, rng);
    CHECK(testutil::max_gradient_error(net, batch) < 1e-4);
  }
  Rng rng(9);
  const auto deep = LstmNetwork::initialize(2, {3, 2}, 2, rng);
  CHECK(testutil::max_gradient_error(deep, testutil::random_batch(2, 2, 6, 3, rng)) < 1e-4);
}

TEST_CASE("normalization") {
  const auto set = sine_set(3, 1);
  const auto n = Normalization::fit(set, {"u", "x"});
  CHECK(n.mean[1] == doctest::Approx(set[0].channel("x").mean()).epsilon(0.05));
  CHECK(n.denormalize("x", n.normalize("x", 12.5)) == doctest::Approx(12.5));
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(10, 2, 4.0);
  const auto c = Normalization::fit({TimeSeries({"u", "x"}, 1.0, flat)}, {"u", "x"});
  CHECK(c.stddev[0] == 1.0);
}

TEST_CASE("training lowers the validation loss") {
  const auto train_set = sine_set(6, 2);
  const auto val = sine_set(2, 3);
  auto cfg = small_config();
  cfg.normalization = Normalization::fit(train_set, {"u", "x"});
  Rng rng(cfg.training.seed);
  const auto untrained = LstmNetwork::initialize(2, cfg.layer_sizes, cfg.output_size(), rng);
  const double before = evaluation_loss(untrained, cfg, val);
  const auto result = train(train_set, val, cfg);
  CHECK(result.log.size() >= 1);
  CHECK(evaluation_loss(result.network, result.config, val) < 0.5 * before);
  const auto pred = predict(result.network, result.config, val[0]);
  CHECK(pred.rows() == 200);
  CHECK(pred.cols() == 2);
  const auto again = train(train_set, val, cfg);
  CHECK(again.network.flatten() == result.network.flatten());
}

TEST_CASE("predictor config validation") {
  auto cfg = small_config();
  cfg.prediction_length = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.predicted_channels = {};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
