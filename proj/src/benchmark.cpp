#include "odeaug/benchmark.hpp"

#include <cmath>

#include "odeaug/control.hpp"
#include "odeaug/error.hpp"
#include "odeaug/random.hpp"

namespace odeaug {

BenchmarkConfig::BenchmarkConfig() {
  for (auto k : {AnomalyKind::Zero, AnomalyKind::OutOfRange, AnomalyKind::WrongState,
                 AnomalyKind::Noise, AnomalyKind::Drift})
    anomalies.push_back(AnomalySpec::defaults(k));
}

void BenchmarkConfig::validate() const {
  if (true_params.size() != 3) throw InvalidArgument("linear1 ground truth needs 3 parameters");
  if (large_count < 1 || small_count < 1 || validation_normal_count < 1 ||
      validation_anomalous_count < 1 || test_count < 1)
    throw InvalidArgument("benchmark set sizes must be at least 1");
  if (small_count > large_count) throw InvalidArgument("small set cannot exceed the large set");
  if (noise < 0.0) throw InvalidArgument("noise must be non-negative");
  if (param_jitter < 0.0 || param_jitter >= 1.0) throw InvalidArgument("param_jitter must lie in [0, 1)");
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 0.5))
    throw InvalidArgument("anomaly_fraction must lie in (0, 0.5)");
  if (anomalies.empty()) throw InvalidArgument("at least one anomaly template is required");
  if (series_length < 64) throw InvalidArgument("series_length must be at least 64");
  if (!(sample_period > 0.0)) throw InvalidArgument("sample period must be positive");
  const auto& c = control;
  if (!(c.high_level_min <= c.high_level_max && c.low_level_min <= c.low_level_max &&
        c.low_level_max < c.high_level_min))
    throw InvalidArgument("control levels must satisfy low range < high range");
  if (c.high_duration_min < 2 || c.low_duration_min < 2 || c.high_duration_min > c.high_duration_max ||
      c.low_duration_min > c.low_duration_max)
    throw InvalidArgument("control durations must be at least 2 and ordered");
}

double LabeledSet::anomaly_fraction() const {
  std::size_t anomalous = 0, total = 0;
  for (const auto& s : series) {
    for (bool b : s.labels_or_normal()) anomalous += b ? 1 : 0;
    total += s.length();
  }
  return total ? static_cast<double>(anomalous) / static_cast<double>(total) : 0.0;
}

RealSeries generate_real_series(const BenchmarkConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p = config.true_params;
  for (auto& v : p) v *= 1.0 + config.param_jitter * rng.uniform(-1.0, 1.0);

  const auto n = config.series_length;
  const auto& cg = config.control;
  std::vector<double> u(n);
  bool high = rng.uniform() < 0.5;
  double first_level = 0.0;
  for (std::size_t pos = 0; pos < n;) {
    const auto dur = static_cast<std::size_t>(
        high ? rng.uniform_int(static_cast<std::int64_t>(cg.high_duration_min),
                               static_cast<std::int64_t>(cg.high_duration_max))
             : rng.uniform_int(static_cast<std::int64_t>(cg.low_duration_min),
                               static_cast<std::int64_t>(cg.low_duration_max)));
    const double level = high ? rng.uniform(cg.high_level_min, cg.high_level_max)
                              : rng.uniform(cg.low_level_min, cg.low_level_max);
    if (pos == 0) first_level = level;
    for (std::size_t i = pos; i < std::min(n, pos + dur); ++i) u[i] = level;
    pos += dur;
    high = !high;
  }
  const double x0 = (p[0] * first_level + p[2]) / p[1];
  const auto clean = integrate(linear1(), OdeParams::single(p, n), u, x0, config.sample_period);
  double lo = clean[0], hi = clean[0];
  for (double v : clean) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double sd = config.noise * (hi - lo);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    values(static_cast<Eigen::Index>(i), 0) = u[i];
    values(static_cast<Eigen::Index>(i), 1) = clean[i] + (sd > 0.0 ? rng.normal(0.0, sd) : 0.0);
  }
  return RealSeries{
      TimeSeries({config.control_channel, config.dependent_channel}, config.sample_period, std::move(values)),
      std::move(p)};
}

namespace {

LabeledSet make_labeled(const BenchmarkConfig& config, std::uint64_t set_seed, std::size_t count) {
  std::vector<RealSeries> clean;
  std::vector<StateSegmentation> segs;
  LabeledSet set;
  for (std::size_t i = 0; i < count; ++i) {
    clean.push_back(generate_real_series(config, derive_seed(set_seed, i)));
    segs.push_back(segment_control(clean.back().series.channel(config.control_channel), std::nullopt, 2));
    TimeSeries s = clean.back().series;
    s.set_labels(Mask(s.length(), false));
    set.series.push_back(std::move(s));
    set.regions.emplace_back();
  }
  const double total = static_cast<double>(count * config.series_length);
  double anomalous = 0.0;
  std::size_t kind_cursor = 0;
  std::size_t failures = 0;
  for (std::size_t step = 0; anomalous < config.anomaly_fraction * total && failures < 50 * count; ++step) {
    const std::size_t i = step % count;
    AnomalySpec spec = config.anomalies[kind_cursor % config.anomalies.size()];
    spec.count = 1;
    spec.seed = derive_seed(derive_seed(set_seed, "inject"), step);
    std::optional<InjectionModel> model;
    if (spec.kind == AnomalyKind::WrongState)
      model = InjectionModel{&linear1(), OdeParams::single(clean[i].params, config.series_length)};
    try {
      auto res = inject(set.series[i], config.dependent_channel, segs[i], model, spec, set.regions[i]);
      for (const auto& r : res.report.regions) {
        anomalous += static_cast<double>(r.size());
        set.regions[i].push_back(r);
      }
      set.series[i] = std::move(res.series);
      ++kind_cursor;
    } catch (const PlacementError&) {
      ++failures;
      ++kind_cursor;
    }
  }
  return set;
}

}  // namespace

Benchmark gen_benchmark(const BenchmarkConfig& config) {
  config.validate();
  Benchmark b;
  b.config = config;
  const auto real_seed = derive_seed(config.seed, "large");
  for (std::size_t i = 0; i < config.large_count; ++i)
    b.large.push_back(generate_real_series(config, derive_seed(real_seed, i)).series);
  b.small.assign(b.large.begin(), b.large.begin() + static_cast<std::ptrdiff_t>(config.small_count));
  const auto vn_seed = derive_seed(config.seed, "validation_normal");
  for (std::size_t i = 0; i < config.validation_normal_count; ++i)
    b.validation_normal.push_back(generate_real_series(config, derive_seed(vn_seed, i)).series);
  b.validation_anomalous =
      make_labeled(config, derive_seed(config.seed, "validation_anomalous"), config.validation_anomalous_count);
  b.test = make_labeled(config, derive_seed(config.seed, "test"), config.test_count);
  return b;
}

}  // namespace odeaug
