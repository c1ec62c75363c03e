#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odeaug/error.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/random.hpp"

using namespace odeaug;
using testutil::linear1_series;
using testutil::square_wave;

namespace {

double max_error_vs_exp(double dt) {
  const auto n = static_cast<std::size_t>(std::round(10.0 / dt)) + 1;
  const std::vector<double> u(n, 1.0);
  const auto x = integrate(linear1(), OdeParams::single({1, 1, 0}, n), u, 0.0, dt);
  double e = 0;
  for (std::size_t i = 0; i < n; ++i)
    e = std::max(e, std::abs(x[i] - (1.0 - std::exp(-static_cast<double>(i) * dt))));
  return e;
}

/// Least squares through the normal equations on the retained rows.
Eigen::Vector3d normal_equations(const RegressionSet& rows) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), 3);
  a.col(0) = rows.control;
  a.col(1) = -rows.state;
  a.col(2).setOnes();
  return (a.transpose() * a).ldlt().solve(a.transpose() * rows.target);
}

SeriesPair noisy_pair(std::uint64_t seed, double noise) {
  Rng rng(seed);
  std::vector<double> levels;
  std::vector<std::size_t> durs;
  for (int k = 0; k < 12; ++k) {
    levels.push_back(k % 2 ? rng.uniform(5, 20) : rng.uniform(55, 85));
    durs.push_back(static_cast<std::size_t>(rng.uniform_int(20, 60)));
  }
  auto s = linear1_series(square_wave(levels, durs), {0.02, 0.05, 3.5});
  Eigen::VectorXd x = s.channel("x");
  const double range = x.maxCoeff() - x.minCoeff();
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += rng.normal(0.0, noise * range);
  s.set_channel("x", x);
  return SeriesPair::from_series(s, "u", "x");
}

}  // namespace

TEST_CASE("rk4 against the closed form") {
  const double e1 = max_error_vs_exp(0.01);
  const double e2 = max_error_vs_exp(0.005);
  CHECK(e1 < 1e-6);
  CHECK(e1 / e2 >= 8.0);
  CHECK(e1 / e2 <= 32.0);
}

TEST_CASE("integration guards") {
  const std::vector<double> u(50, 1.0);
  CHECK_THROWS_AS(integrate(linear1(), OdeParams::single({1, -2, 0}, 50), u, 1.0, 1.0, 1e3),
                  DivergenceError);
  CHECK_THROWS_AS(integrate(linear1(), OdeParams::single({1, 1}, 50), u, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(structure_by_id("cubic9"), InvalidArgument);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(OdeParams::single({inf, 1, 0}, 50).validate(linear1()), InvalidArgument);
}

TEST_CASE("windowed parameters") {
  OdeParams p{{{0, 10, {1, 1, 0}}, {10, 25, {2, 1, 0}}}};
  CHECK_NOTHROW(p.validate(linear1()));
  CHECK(p.at(3)[0] == 1);
  CHECK(p.at(10)[0] == 2);
  CHECK(p.at(40)[0] == 2);
  CHECK(p.span() == 25);
  const auto r = p.retarget(40);
  CHECK(r.span() == 40);
  CHECK(r.windows.back().start == 10);
  const auto c = p.retarget(5);
  CHECK(c.windows.size() == 1);
  CHECK(c.span() == 5);
  CHECK(p.with_flat(p.flatten()) == p);
  OdeParams gap{{{0, 10, {1, 1, 0}}, {12, 25, {2, 1, 0}}}};
  CHECK_THROWS_AS(gap.validate(linear1()), InvalidArgument);
  OdeParams unstable = OdeParams::single({1, -0.1, 0}, 10);
  CHECK(unstable.stability_notes(linear1()).size() == 1);
}

TEST_CASE("drop fraction removes the top-curvature samples") {
  const auto pair = noisy_pair(1, 0.0);
  FitConfig cfg;
  const auto all = prepare_regression(pair, 0.0, cfg);
  const auto some = prepare_regression(pair, 0.1, cfg);
  CHECK(all.size() == pair.length());
  CHECK(some.size() == pair.length() - pair.length() / 10);
  CHECK_THROWS_AS(prepare_regression(pair, 1.0, cfg), InvalidArgument);
}

TEST_CASE("sgd matches the normal equations") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto pair = noisy_pair(seed, 0.01);
    FitConfig cfg;
    cfg.sgd.seed = seed;
    const auto rows = prepare_regression(pair, 0.1, cfg);
    const auto sgd = sgd_regression(linear1(), rows, cfg.sgd);
    const auto oracle = normal_equations(rows);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(sgd[static_cast<std::size_t>(k)] - oracle[k]) < 1e-3);
  }
}

TEST_CASE("sgd rejects a rank-deficient design") {
  Eigen::VectorXd u = Eigen::VectorXd::Constant(100, 3.0);
  RegressionSet rows;
  rows.control = u;
  rows.state = Eigen::VectorXd::Constant(100, 1.0);
  rows.target = Eigen::VectorXd::Zero(100);
  rows.retained.resize(100);
  CHECK_THROWS_AS(sgd_regression(linear1(), rows, SgdConfig{}), UnidentifiableError);
}

TEST_CASE("noiseless fit recovers the parameters") {
  const auto pair = noisy_pair(4, 0.0);
  const auto report = fit(pair, linear1(), FitConfig{});
  const auto& p = report.params.at(0);
  CHECK(p[0] == doctest::Approx(0.02).epsilon(0.05));
  CHECK(p[1] == doctest::Approx(0.05).epsilon(0.05));
  CHECK(p[2] == doctest::Approx(3.5).epsilon(0.05));
  CHECK(report.candidates.size() == 3);
  for (std::size_t i = 1; i < report.candidates.size(); ++i)
    CHECK(report.candidates[i - 1].rmse <= report.candidates[i].rmse);
}

TEST_CASE("particle swarm never worsens the best candidate") {
  const auto pair = noisy_pair(5, 0.02);
  FitConfig cfg;
  const auto cands = fit_gradient_sgd(pair, linear1(), cfg.drop_fractions, cfg);
  PsoConfig pso;
  pso.iterations = 30;
  const auto refined = refine_pso(cands, pair, linear1(), pso);
  CHECK(refined.rmse <= cands.front().rmse);
  pso.iterations = 0;
  const auto same = refine_pso(cands, pair, linear1(), pso);
  CHECK(same.params == cands.front().params);
  CHECK(same.rmse == cands.front().rmse);
  CHECK_THROWS_AS(refine_pso({}, pair, linear1(), pso), InvalidArgument);
}

TEST_CASE("particle swarm reports total divergence") {
  const auto pair = noisy_pair(6, 0.0);
  Candidate bad{OdeParams::single({50, -5, 0}, pair.length()),
                std::numeric_limits<double>::infinity(), 0.1};
  PsoConfig pso;
  pso.iterations = 3;
  pso.swarm_size = 4;
  CHECK_THROWS_AS(refine_pso({bad}, pair, linear1(), pso), RefinementFailed);
}

TEST_CASE("windowed fit covers every window") {
  const auto pair = noisy_pair(7, 0.0);
  FitConfig cfg;
  cfg.window_breaks = {150, 300};
  const auto report = fit(pair, linear1(), cfg);
  CHECK(report.params.windows.size() == 3);
  CHECK(report.params.span() == pair.length());
  CHECK(std::isfinite(report.rmse));
}
