#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odeaug/anomaly.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

/// Ranges of the two-state control used to synthesize "real" series.
struct ControlGenerator {
  double high_level_min = 55.0;
  double high_level_max = 85.0;
  double low_level_min = 5.0;
  double low_level_max = 20.0;
  std::size_t high_duration_min = 20;
  std::size_t high_duration_max = 60;
  std::size_t low_duration_min = 20;
  std::size_t low_duration_max = 80;
};

/// Desk-scale stand-in for a recorded engine dataset: linear1 dynamics with
/// per-series parameter jitter, measurement noise and injected anomalies.
struct BenchmarkConfig {
  std::vector<double> true_params{0.02, 0.05, 3.5};
  double param_jitter = 0.1;
  ControlGenerator control;
  double sample_period = 1.0;
  std::size_t series_length = 500;
  /// Series counts follow a 0.5 / 0.15 / 0.15 / 0.2 split into training,
  /// validation-N, validation-A and test.
  std::size_t large_count = 30;
  /// The small set is the first `small_count` series of the large set.
  std::size_t small_count = 8;
  std::size_t validation_normal_count = 9;
  std::size_t validation_anomalous_count = 9;
  std::size_t test_count = 12;
  /// Measurement noise std as a fraction of each series' clean range.
  double noise = 0.01;
  /// Target fraction of anomalous points in each labeled set.
  double anomaly_fraction = 0.05;
  /// Anomaly templates used round-robin; seeds are derived per injection.
  std::vector<AnomalySpec> anomalies;
  std::string control_channel = "APP";
  std::string dependent_channel = "CT";
  std::uint64_t seed = 0;

  BenchmarkConfig();
  void validate() const;
};

struct LabeledSet {
  std::vector<TimeSeries> series;
  std::vector<std::vector<AnomalyRegion>> regions;

  double anomaly_fraction() const;
};

struct Benchmark {
  BenchmarkConfig config;
  std::vector<TimeSeries> large;
  std::vector<TimeSeries> small;
  std::vector<TimeSeries> validation_normal;
  LabeledSet validation_anomalous;
  LabeledSet test;
};

/// One clean "real" series plus its ground-truth parameters.
struct RealSeries {
  TimeSeries series;
  std::vector<double> params;
};

RealSeries generate_real_series(const BenchmarkConfig& config, std::uint64_t seed);

Benchmark gen_benchmark(const BenchmarkConfig& config);

}  // namespace odeaug
