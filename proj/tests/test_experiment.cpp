#include "doctest.h"
#include "odeaug/error.hpp"
#include "odeaug/experiment.hpp"

using namespace odeaug;

namespace {

BenchmarkConfig tiny_benchmark() {
  BenchmarkConfig bc;
  bc.series_length = 240;
  bc.large_count = 6;
  bc.small_count = 3;
  bc.validation_normal_count = 2;
  bc.validation_anomalous_count = 3;
  bc.test_count = 3;
  bc.anomaly_fraction = 0.08;
  bc.seed = 3;
  return bc;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig ec;
  ec.architectures = {{4}};
  ec.predictor.training.max_epochs = 3;
  ec.ode_count = 4;
  ec.seed = 5;
  return ec;
}

}  // namespace

TEST_CASE("benchmark layout") {
  const auto b = gen_benchmark(tiny_benchmark());
  CHECK(b.large.size() == 6);
  REQUIRE(b.small.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(b.small[i].values() == b.large[i].values());
  CHECK(b.test.series.size() == 3);
  CHECK(b.test.anomaly_fraction() >= 0.08);
  CHECK(b.validation_anomalous.anomaly_fraction() >= 0.08);
  for (const auto& s : b.large) CHECK_FALSE(s.labels().has_value());
  for (const auto& s : b.test.series) CHECK(s.channel_names() == std::vector<std::string>{"APP", "CT"});
  const auto again = gen_benchmark(tiny_benchmark());
  CHECK(again.test.series[1].values() == b.test.series[1].values());
  auto bad = tiny_benchmark();
  bad.small_count = 10;
  CHECK_THROWS_AS(gen_benchmark(bad), InvalidArgument);
}

TEST_CASE("regime names") {
  for (auto r : all_regimes()) CHECK(regime_from_name(regime_name(r)) == r);
  CHECK_THROWS_AS(regime_from_name("X(r)"), InvalidArgument);
}

TEST_CASE("experiment bookkeeping and curve endpoints") {
  const auto b = gen_benchmark(tiny_benchmark());
  const auto ec = tiny_experiment();
  const auto report = run_experiment(b, all_regimes(), ec);
  REQUIRE(report.rows.size() == 5);
  const auto& small = report.row("S(r)");
  const auto& ode = report.row("ODE(s)");
  const auto& both = report.row("S(r)+ODE(s)");
  CHECK(small.ns == 3);
  CHECK(ode.ns == 4);
  CHECK(both.ns == small.ns + ode.ns);
  CHECK(both.np == small.np + ode.np);
  CHECK(report.row("L(r)+ODE(s)").np == report.row("L(r)").np + ode.np);

  const auto curve = augmentation_curve(b, {0.0, 0.5, 1.0}, ec);
  REQUIRE(curve.size() == 3);
  CHECK(curve[1].generated == 2);
  CHECK(curve.front().f_score == small.f_score);
  CHECK(curve.back().f_score == both.f_score);
  CHECK_THROWS_AS(augmentation_curve(b, {0.5, 1.0}, ec), InvalidArgument);

  auto par = ec;
  par.parallel = true;
  const auto p = run_experiment(b, {Regime::Small, Regime::SmallPlusOde}, par);
  CHECK(p.row("S(r)").f_score == small.f_score);
  CHECK(p.row("S(r)+ODE(s)").f_score == both.f_score);
}
