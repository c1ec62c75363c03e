#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "odeaug/error.hpp"
#include "odeaug/metrics.hpp"
#include "odeaug/random.hpp"
#include "odeaug/scorer.hpp"

using namespace odeaug;

namespace {

/// Best F over every threshold that changes the prediction set, scanning the
/// sorted scores directly.
double brute_force_f(const std::vector<double>& scores, const Mask& labels, double beta) {
  std::vector<double> cuts{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (double s : scores) cuts.push_back(std::nextafter(s, std::numeric_limits<double>::infinity()));
  double best = 0.0;
  for (double c : cuts) {
    Mask pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] < c;
    best = std::max(best, prf_metrics(pred, labels, beta).f_score);
  }
  return best;
}

}  // namespace

TEST_CASE("error vectors line up past predictions") {
  // Predictions made at t for t+1..t+2 are exactly the actual value, except
  // the one made at 3 for 5 which is off by 1.
  const std::size_t n = 8, l = 2;
  Eigen::MatrixXd actual(n, 1);
  for (std::size_t i = 0; i < n; ++i) actual(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i * i);
  Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(n, l);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 1; i <= l && t + i < n; ++i)
      pred(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i - 1)) = actual(static_cast<Eigen::Index>(t + i), 0);
  pred(3, 1) += 1.0;
  const auto ev = error_vectors(pred, actual, l);
  REQUIRE(ev.size() == n - l);
  CHECK(ev.t.front() == l);
  for (std::size_t r = 0; r < ev.size(); ++r) {
    const bool off = ev.t[r] == 5;
    CHECK(ev.e(static_cast<Eigen::Index>(r), 0) == 0.0);
    CHECK(ev.e(static_cast<Eigen::Index>(r), 1) == (off ? -1.0 : 0.0));
  }
}

TEST_CASE("gaussian fit equals sample moments") {
  Rng rng(3);
  Eigen::MatrixXd e(200, 3);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal() * (1 + i % 3);
  const auto g = fit_gaussian(e, 0.0);
  for (Eigen::Index a = 0; a < 3; ++a) {
    double m = 0;
    for (Eigen::Index r = 0; r < 200; ++r) m += e(r, a);
    m /= 200;
    CHECK(std::abs(g.mean()[a] - m) < 1e-12);
    for (Eigen::Index b = 0; b < 3; ++b) {
      double mb = 0, c = 0;
      for (Eigen::Index r = 0; r < 200; ++r) mb += e(r, b);
      mb /= 200;
      for (Eigen::Index r = 0; r < 200; ++r) c += (e(r, a) - m) * (e(r, b) - mb);
      CHECK(std::abs(g.covariance()(a, b) - c / 200) < 1e-12);
    }
  }
  const auto d = fit_gaussian(e, 0.5, true);
  CHECK(d.covariance()(0, 1) == 0.0);
  CHECK(d.covariance()(0, 0) == doctest::Approx(g.covariance()(0, 0) + 0.5));
}

TEST_CASE("log likelihood") {
  GaussianScorer one(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 0.0);
  CHECK(std::abs(one.log_likelihood(Eigen::VectorXd::Zero(1)) + 0.918938533204673) < 1e-12);
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  GaussianScorer two(Eigen::Vector2d(1, -1), cov, 0.0);
  const Eigen::Vector2d x(0.3, 0.7);
  const Eigen::Vector2d d = x - Eigen::Vector2d(1, -1);
  const double expected =
      -0.5 * (d.dot(cov.inverse() * d) + std::log(cov.determinant()) + 2 * std::log(2 * std::numbers::pi));
  CHECK(two.log_likelihood(x) == doctest::Approx(expected).epsilon(1e-12));
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(GaussianScorer(Eigen::VectorXd::Zero(2), singular, 0.0), NotPositiveDefinite);
  Eigen::MatrixXd collinear(50, 2);
  for (Eigen::Index i = 0; i < 50; ++i) collinear(i, 0) = collinear(i, 1) = static_cast<double>(i % 7);
  CHECK_THROWS_AS(fit_gaussian(collinear, 0.0), NotPositiveDefinite);
  const auto ridged = fit_gaussian(collinear, 1e-6);
  CHECK(std::isfinite(ridged.log_likelihood(Eigen::Vector2d(1, 2))));
}

TEST_CASE("threshold selection against brute force") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> scores(300);
    Mask labels(300);
    for (std::size_t i = 0; i < 300; ++i) {
      labels[i] = rng.uniform() < 0.15;
      scores[i] = std::round((labels[i] ? -2.0 : 0.0) + rng.normal() * 2.0);
    }
    const auto choice = select_threshold(scores, labels, 1.0);
    CHECK(choice.f_score == brute_force_f(scores, labels, 1.0));
    const auto m = prf_metrics(detect_scores(scores, choice.threshold), labels);
    CHECK(m.f_score == choice.f_score);
  }
  CHECK_THROWS_AS(select_threshold(std::vector<double>{1, 2}, Mask{false, false}), DegenerateLabels);
}

TEST_CASE("metric conventions") {
  CHECK(prf_metrics(Mask{false, false}, Mask{false, false}).f_score == 1.0);
  const auto none = prf_metrics(Mask{false, false}, Mask{true, false});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f_score == 0.0);
  const auto m = prf_metrics(Mask{true, true, false, false}, Mask{true, false, true, false});
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f_score == 0.5);
  CHECK(f_beta(1.0, 0.5, 2.0) == doctest::Approx(5.0 * 0.5 / (4.0 + 0.5)));
  CHECK_THROWS_AS(prf_metrics(Mask{true}, Mask{true, false}), InvalidArgument);
}
