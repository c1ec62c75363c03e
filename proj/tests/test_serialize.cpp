#include "doctest.h"
#include "helpers.hpp"
#include "odeaug/error.hpp"
#include "odeaug/serialize.hpp"

using namespace odeaug;

TEST_CASE("fit report round trip") {
  FitReport r;
  r.structure_id = "linear1";
  r.params = OdeParams{{{0, 10, {1, 2, 3}}, {10, 20, {4, 5, 6}}}};
  r.rmse = 0.25;
  r.candidates.push_back(Candidate{r.params, std::numeric_limits<double>::infinity(), 0.1});
  json j = r;
  CHECK(j.at("version") == kFormatVersion);
  const auto back = json::parse(j.dump()).get<FitReport>();
  CHECK(back.params == r.params);
  CHECK(std::isinf(back.candidates[0].rmse));
  j.erase("version");
  CHECK_THROWS_AS(j.get<FitReport>(), InvalidArgument);
}

TEST_CASE("detector round trip is exact") {
  Rng rng(4);
  Detector d;
  d.config.layer_sizes = {3};
  d.config.prediction_length = 2;
  d.config.input_channels = {"u", "x"};
  d.config.predicted_channels = {"x"};
  d.config.normalization = Normalization{{"u", "x"}, {1.5, 2.5}, {0.1, 3.0}};
  d.network = LstmNetwork::initialize(2, {3}, 2, rng);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0 / 3.0, 0.1, 0.1, 2.0;
  d.scorer = GaussianScorer(Eigen::Vector2d(0.1, -0.2), cov, 1e-6);
  d.scorer.set_threshold(-4.25);
  const json j = d;
  const auto back = json::parse(j.dump()).get<Detector>();
  CHECK(back.network.flatten() == d.network.flatten());
  CHECK(back.scorer.covariance() == d.scorer.covariance());
  CHECK(*back.scorer.threshold() == -4.25);
  CHECK(back.config.normalization.stddev == d.config.normalization.stddev);
  json broken = j;
  broken["network"]["output_size"] = 7;
  CHECK_THROWS_AS(broken.get<Detector>(), InvalidArgument);
}

TEST_CASE("configs default missing fields") {
  const auto fc = json::parse(R"({"use_pso": true})").get<FitConfig>();
  CHECK(fc.use_pso);
  CHECK(fc.drop_fractions.size() == 3);
  const auto ec = json::parse(R"({"architectures": [[8]], "predictor": {"prediction_length": 4}})").get<ExperimentConfig>();
  CHECK(ec.architectures.size() == 1);
  CHECK(ec.predictor.prediction_length == 4);
  CHECK(ec.ode_count == 24);
  const auto spec = json::parse(R"({"kind": "NOISE", "duration": 7})").get<AnomalySpec>();
  CHECK(spec.duration.samples == 7);
  CHECK(spec.magnitude == 3.0);
}

TEST_CASE("profile round trip") {
  std::vector<StateSegmentation> segs{
      segment_control(testutil::square_wave({10, 80}, {10, 12, 9, 14}), std::nullopt, 2)};
  const auto p = build_profile(segs, 10);
  const auto back = json::parse(json(p).dump()).get<ControlProfile>();
  CHECK(back.high.duration.edges == p.high.duration.edges);
  CHECK(back.low.level.counts == p.low.level.counts);
  CHECK(back.start_low == p.start_low);
}
