#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odeaug/control.hpp"
#include "odeaug/error.hpp"

using namespace odeaug;
using testutil::square_wave;

TEST_CASE("two-state segmentation of a clean square wave") {
  const auto u = square_wave({10, 80}, {5, 6, 4, 5});
  const auto seg = segment_control(u, std::nullopt, 2);
  CHECK(seg.threshold == doctest::Approx(45.0));
  CHECK_FALSE(seg.degenerate);
  REQUIRE(seg.segments.size() == 4);
  const std::size_t starts[] = {0, 5, 11, 15};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(seg.segments[i].start == starts[i]);
    CHECK(seg.segments[i].state == (i % 2 ? ControlState::High : ControlState::Low));
    CHECK(seg.segments[i].level == (i % 2 ? 80.0 : 10.0));
  }
  CHECK(seg.length() == 20);
  CHECK(seg.mean_level(ControlState::High) == 80.0);
}

TEST_CASE("short runs merge into the longer neighbour") {
  Eigen::VectorXd u = square_wave({10, 80}, {8, 8});
  u[3] = 80;
  const auto seg = segment_control(u, 45.0, 2);
  REQUIRE(seg.segments.size() == 2);
  CHECK(seg.segments[0].duration == 8);
  CHECK(seg.segments[1].start == 8);
  const auto raw = segment_control(u, 45.0, 1);
  CHECK(raw.segments.size() == 4);
}

TEST_CASE("segmentation edge cases") {
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(10, 3.0);
  const auto seg = segment_control(flat, std::nullopt, 2);
  CHECK(seg.degenerate);
  CHECK(seg.segments.size() == 1);
  CHECK_THROWS_AS(segment_control(flat.head(3), std::nullopt, 2), InvalidArgument);
  const auto explicit_thr = segment_control(flat, 1.0, 2);
  CHECK(explicit_thr.segments.front().state == ControlState::High);
}

TEST_CASE("cycle window breaks") {
  const auto seg = segment_control(square_wave({10, 80}, {5, 6, 4, 5, 7}), std::nullopt, 2);
  const auto breaks = cycle_window_breaks(seg);
  REQUIRE(breaks.size() == 1);
  CHECK(breaks[0] == 11);
}

TEST_CASE("histogram bins and implied mean") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto h = Histogram::build(v, 2);
  REQUIRE(h.edges.size() == 3);
  CHECK(h.counts == std::vector<std::size_t>{2, 2});
  CHECK(h.implied_mean() == doctest::Approx(2.5));
  const auto one = Histogram::build(std::vector<double>{7, 7, 7}, 10);
  CHECK(one.counts.size() == 1);
  CHECK(one.implied_mean() == doctest::Approx(7.0));
  CHECK(Histogram::build(std::vector<double>{}, 10).empty());
}

TEST_CASE("histogram sampling integrates to the implied mean") {
  const std::vector<double> v{0, 0, 0, 1, 5, 9, 9.5, 10};
  const auto h = Histogram::build(v, 4);
  Rng rng(11);
  const int n = 40000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double x = h.sample(rng);
    CHECK_UNARY(x >= h.edges.front());
    CHECK_UNARY(x <= h.edges.back());
    sum += x;
  }
  // Uniform within each bin: the exact mean of the sampler is the
  // count-weighted mean of bin centers.
  double exact = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    exact += static_cast<double>(h.counts[b]) * 0.5 * (h.edges[b] + h.edges[b + 1]);
  exact /= static_cast<double>(h.total());
  CHECK(sum / n == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("sampled control alternates and fits the length") {
  std::vector<StateSegmentation> segs;
  segs.push_back(segment_control(square_wave({10, 80}, {20, 30, 25, 35, 15}), std::nullopt, 2));
  segs.push_back(segment_control(square_wave({70, 12}, {40, 22, 31, 18}), std::nullopt, 2));
  const auto profile = build_profile(segs, 10);
  CHECK(profile.source_count == 2);
  CHECK(profile.start_low == 1);
  CHECK(profile.start_high == 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = sample_control(profile, 333, seed);
    CHECK(sc.values.size() == 333);
    CHECK(sc.segmentation.length() == 333);
    for (std::size_t i = 1; i < sc.segmentation.segments.size(); ++i)
      CHECK(sc.segmentation.segments[i].state != sc.segmentation.segments[i - 1].state);
    for (const auto& g : sc.segmentation.segments) {
      const auto& lv = profile.of(g.state).level;
      CHECK_UNARY(g.level >= lv.edges.front());
      CHECK_UNARY(g.level <= lv.edges.back());
    }
  }
  const auto a = sample_control(profile, 100, 5);
  const auto b = sample_control(profile, 100, 5);
  CHECK(a.values == b.values);
}

TEST_CASE("sampling needs both states") {
  std::vector<StateSegmentation> segs{segment_control(Eigen::VectorXd::Constant(10, 5.0), 1.0, 2)};
  const auto profile = build_profile(segs, 10);
  CHECK(profile.single_state);
  CHECK_THROWS_AS(sample_control(profile, 10, 0), InvalidArgument);
}

TEST_CASE("donor selection uses normalized distance") {
  const std::vector<PairFeatures> training{
      {100, 30, 60, 10}, {200, 30, 60, 12}, {150, 30, 60, 20}};
  // Raw Euclidean distance would pick index 2; after z-scoring each
  // coordinate the second pair is nearest.
  CHECK(select_donor({160, 30, 60, 10.5}, training) == 1);
  const std::vector<PairFeatures> twins{{1, 2, 3, 4}, {1, 2, 3, 4}};
  CHECK(select_donor({1, 2, 3, 4}, twins) == 0);
  CHECK_THROWS_AS(select_donor({1, 2, 3, 4}, std::vector<PairFeatures>{}), InvalidArgument);
}

TEST_CASE("pair features fall back to the profile") {
  const auto seg = segment_control(square_wave({10, 80}, {4, 6, 4, 6}), std::nullopt, 2);
  const auto f = pair_features(seg);
  CHECK(f.mean_high_duration == 6);
  CHECK(f.mean_low_duration == 4);
  CHECK(f.mean_high_level == 80);
  const auto only_low = segment_control(Eigen::VectorXd::Constant(10, 5.0), 50.0, 2);
  CHECK_THROWS_AS(pair_features(only_low), InvalidArgument);
  const auto profile = build_profile({seg}, 10);
  const auto g = pair_features(only_low, &profile);
  CHECK(g.mean_high_level == doctest::Approx(profile.high.level.implied_mean()));
  CHECK(g.mean_low_level == 5.0);
}
