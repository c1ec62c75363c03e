#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odeaug/anomaly.hpp"
#include "odeaug/error.hpp"

using namespace odeaug;
using testutil::linear1_series;
using testutil::square_wave;

namespace {

TimeSeries host() {
  return linear1_series(square_wave({10, 75}, {40, 60, 50, 70, 40, 60, 30}), {0.02, 0.05, 3.5});
}

double channel_stats(const Eigen::VectorXd& x, double& mn, double& mx) {
  mn = x.minCoeff();
  mx = x.maxCoeff();
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().mean());
}

}  // namespace

TEST_CASE("kind names") {
  for (auto k : {AnomalyKind::Zero, AnomalyKind::OutOfRange, AnomalyKind::WrongState, AnomalyKind::Noise,
                 AnomalyKind::Drift})
    CHECK(anomaly_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(anomaly_kind_from_string("SPIKE"), InvalidArgument);
  CHECK_FALSE(requires_high_state(AnomalyKind::Noise));
  CHECK(requires_high_state(AnomalyKind::Drift));
}

TEST_CASE("regions stay inside HIGH segments over many seeds") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  const auto states = seg.states();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    auto spec = AnomalySpec::defaults(AnomalyKind::Zero, seed);
    spec.count = 2;
    const auto regions = pick_injection_regions(seg, spec, s.length(), rng);
    REQUIRE(regions.size() == 2);
    for (auto [a, b] : regions) {
      CHECK(a < b);
      CHECK(b <= s.length());
      for (std::size_t i = a; i < b; ++i) CHECK(states[i] == ControlState::High);
    }
    CHECK_UNARY(regions[0].second <= regions[1].first || regions[1].second <= regions[0].first);
  }
}

TEST_CASE("impossible placement is reported") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  Rng rng(0);
  auto spec = AnomalySpec::defaults(AnomalyKind::Drift);
  spec.duration = AnomalyDuration::fixed(500);
  CHECK_THROWS_AS(pick_injection_regions(seg, spec, s.length(), rng), PlacementError);
}

TEST_CASE("ZERO and OUT_OF_RANGE values") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  const auto zero = inject(s, "x", seg, std::nullopt, AnomalySpec::defaults(AnomalyKind::Zero, 3));
  const auto& r = zero.report.regions.at(0);
  const Eigen::VectorXd x0 = s.channel("x"), x1 = zero.series.channel("x");
  for (std::size_t i = 0; i < s.length(); ++i) {
    const bool in = i >= r.start && i < r.end;
    CHECK((*zero.series.labels())[i] == in);
    if (in)
      CHECK(x1[static_cast<Eigen::Index>(i)] == 0.0);
    else
      CHECK(x1[static_cast<Eigen::Index>(i)] == x0[static_cast<Eigen::Index>(i)]);
  }
  CHECK(zero.series.channel("u") == s.channel("u"));

  double mn, mx;
  channel_stats(x0, mn, mx);
  auto spec = AnomalySpec::defaults(AnomalyKind::OutOfRange, 4);
  spec.side = ExceedSide::High;
  const auto oor = inject(s, "x", seg, std::nullopt, spec);
  const auto& q = oor.report.regions.at(0);
  CHECK(oor.series.channel("x")[static_cast<Eigen::Index>(q.start)] ==
        doctest::Approx(mx + 0.1 * (mx - mn)));
}

TEST_CASE("NOISE adds noise of the requested spread") {
  auto base = host();
  // Flat dependent channel with unit spread outside the region.
  Eigen::VectorXd x(static_cast<Eigen::Index>(base.length()));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = (i % 2) ? 1.0 : -1.0;
  base.set_channel("x", x);
  const auto seg = segment_control(base, "u", std::nullopt, 2);
  auto spec = AnomalySpec::defaults(AnomalyKind::Noise, 8);
  spec.duration = AnomalyDuration::fixed(300);
  const auto res = inject(base, "x", seg, std::nullopt, spec);
  const auto& r = res.report.regions.at(0);
  const Eigen::VectorXd d = (res.series.channel("x") - x).segment(static_cast<Eigen::Index>(r.start), 300);
  const double sd = std::sqrt(d.array().square().mean());
  CHECK(sd == doctest::Approx(3.0).epsilon(0.12));
  CHECK(std::abs(d.mean()) < 0.5);
}

TEST_CASE("DRIFT ends above the normal range") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  const auto res = inject(s, "x", seg, std::nullopt, AnomalySpec::defaults(AnomalyKind::Drift, 2));
  double mn, mx;
  channel_stats(s.channel("x"), mn, mx);
  const auto& r = res.report.regions.at(0);
  CHECK(r.size() == 20);
  CHECK(res.series.channel("x")[static_cast<Eigen::Index>(r.end - 1)] ==
        doctest::Approx(mx + 0.1 * (mx - mn)));
}

TEST_CASE("WRONG_STATE decays toward the LOW equilibrium") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  CHECK_THROWS_AS(inject(s, "x", seg, std::nullopt, AnomalySpec::defaults(AnomalyKind::WrongState)),
                  InvalidArgument);
  const InjectionModel model{&linear1(), OdeParams::single({0.02, 0.05, 3.5}, s.length())};
  const auto res = inject(s, "x", seg, model, AnomalySpec::defaults(AnomalyKind::WrongState, 1));
  const auto& r = res.report.regions.at(0);
  const Eigen::VectorXd x = res.series.channel("x");
  const double low_eq = (0.02 * 10 + 3.5) / 0.05;
  CHECK(std::abs(x[static_cast<Eigen::Index>(r.end - 1)] - low_eq) <
        std::abs(x[static_cast<Eigen::Index>(r.start)] - low_eq));
}

TEST_CASE("prior labels are kept and avoided") {
  const auto s = host();
  const auto seg = segment_control(s, "u", std::nullopt, 2);
  const auto first = inject(s, "x", seg, std::nullopt, AnomalySpec::defaults(AnomalyKind::Drift, 1));
  const auto second = inject(first.series, "x", seg, std::nullopt, AnomalySpec::defaults(AnomalyKind::Noise, 2),
                             first.report.regions);
  const auto& a = first.report.regions.at(0);
  const auto& b = second.report.regions.at(0);
  CHECK_UNARY(a.end <= b.start || b.end <= a.start);
  for (std::size_t i = a.start; i < a.end; ++i) CHECK((*second.series.labels())[i]);
}

TEST_CASE("spec validation") {
  auto spec = AnomalySpec::defaults(AnomalyKind::Noise);
  spec.magnitude = -1;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = AnomalySpec::defaults(AnomalyKind::Zero);
  spec.duration = AnomalyDuration::fraction(0.8, 0.2);
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}
