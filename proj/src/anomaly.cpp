#include "odeaug/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odeaug/error.hpp"

namespace odeaug {

const char* to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::Zero: return "ZERO";
    case AnomalyKind::OutOfRange: return "OUT_OF_RANGE";
    case AnomalyKind::WrongState: return "WRONG_STATE";
    case AnomalyKind::Noise: return "NOISE";
    case AnomalyKind::Drift: return "DRIFT";
  }
  return "?";
}

AnomalyKind anomaly_kind_from_string(const std::string& s) {
  for (auto k : {AnomalyKind::Zero, AnomalyKind::OutOfRange, AnomalyKind::WrongState,
                 AnomalyKind::Noise, AnomalyKind::Drift})
    if (s == to_string(k)) return k;
  throw InvalidArgument("unknown anomaly kind '" + s + "'");
}

bool requires_high_state(AnomalyKind k) { return k != AnomalyKind::Noise; }

AnomalySpec AnomalySpec::defaults(AnomalyKind kind, std::uint64_t seed) {
  AnomalySpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case AnomalyKind::Zero:
    case AnomalyKind::WrongState:
      s.duration = AnomalyDuration::fraction(0.25, 0.75);
      s.magnitude = 0.0;
      break;
    case AnomalyKind::OutOfRange:
      s.duration = AnomalyDuration::fraction(0.25, 0.75);
      s.magnitude = 0.1;
      break;
    case AnomalyKind::Noise:
      s.duration = AnomalyDuration::fixed(20);
      s.magnitude = 3.0;
      break;
    case AnomalyKind::Drift:
      s.duration = AnomalyDuration::fixed(20);
      s.magnitude = 0.1;
      break;
  }
  return s;
}

void AnomalySpec::validate() const {
  if (count < 1) throw InvalidArgument("anomaly count must be at least 1");
  if (duration.samples == 0 &&
      !(duration.min_fraction > 0.0 && duration.min_fraction <= duration.max_fraction &&
        duration.max_fraction <= 1.0))
    throw InvalidArgument("fractional anomaly duration must satisfy 0 < min <= max <= 1");
  const bool needs_magnitude = kind == AnomalyKind::OutOfRange || kind == AnomalyKind::Noise ||
                               kind == AnomalyKind::Drift;
  if (needs_magnitude && !(magnitude > 0.0))
    throw InvalidArgument(std::string(to_string(kind)) + " needs a positive magnitude");
}

namespace {

bool overlaps(std::size_t s, std::size_t e, const std::vector<std::pair<std::size_t, std::size_t>>& taken,
              const std::vector<AnomalyRegion>& occupied) {
  for (auto [a, b] : taken)
    if (s < b && a < e) return true;
  for (const auto& r : occupied)
    if (s < r.end && r.start < e) return true;
  return false;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> pick_injection_regions(
    const StateSegmentation& segmentation, const AnomalySpec& spec, std::size_t series_length,
    Rng& rng, const std::vector<AnomalyRegion>& occupied) {
  spec.validate();
  std::vector<Segment> hosts;
  if (requires_high_state(spec.kind)) {
    for (const auto& g : segmentation.segments)
      if (g.state == ControlState::High && g.end() <= series_length) hosts.push_back(g);
  } else {
    hosts.push_back(Segment{ControlState::Low, 0, series_length, 0.0});
  }
  const bool fixed = spec.duration.samples > 0;
  if (fixed) {
    // Fixed length: hosts must be strictly longer than the region.
    std::erase_if(hosts, [&](const Segment& g) {
      return requires_high_state(spec.kind) ? g.duration <= spec.duration.samples
                                            : g.duration < spec.duration.samples;
    });
  } else {
    std::erase_if(hosts, [](const Segment& g) { return g.duration < 2; });
  }
  if (hosts.empty())
    throw PlacementError(std::string("no eligible placement for ") + to_string(spec.kind));

  // Position weights: each host contributes one weight per feasible start.
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t attempts = 1000 * spec.count;
  for (std::size_t a = 0; a < attempts && out.size() < spec.count; ++a) {
    std::size_t len;
    const Segment* host;
    if (fixed) {
      len = spec.duration.samples;
      std::vector<std::size_t> weights;
      for (const auto& g : hosts) weights.push_back(g.duration - len + 1);
      host = &hosts[rng.discrete(std::span<const std::size_t>(weights))];
    } else {
      host = &hosts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(hosts.size()) - 1))];
      const double frac = rng.uniform(spec.duration.min_fraction, spec.duration.max_fraction);
      len = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(frac * static_cast<double>(host->duration))), 1,
          host->duration);
    }
    const auto start = host->start + static_cast<std::size_t>(rng.uniform_int(
                                         0, static_cast<std::int64_t>(host->duration - len)));
    if (overlaps(start, start + len, out, occupied)) continue;
    out.emplace_back(start, start + len);
  }
  if (out.size() < spec.count)
    throw PlacementError("could only place " + std::to_string(out.size()) + " of " +
                         std::to_string(spec.count) + " " + to_string(spec.kind) + " regions");
  std::sort(out.begin(), out.end());
  return out;
}

InjectionResult inject(const TimeSeries& series, const std::string& dependent_channel,
                       const StateSegmentation& segmentation,
                       const std::optional<InjectionModel>& model, const AnomalySpec& spec,
                       const std::vector<AnomalyRegion>& occupied) {
  spec.validate();
  if (spec.kind == AnomalyKind::WrongState && (!model || !model->structure))
    throw InvalidArgument("WRONG_STATE injection needs a fitted ODE model");

  Rng rng(spec.seed);
  const auto regions = pick_injection_regions(segmentation, spec, series.length(), rng, occupied);

  const Eigen::VectorXd original = series.channel(dependent_channel);
  Eigen::VectorXd x = original;
  // Statistics of the normal (not yet labeled) part of the channel.
  const Mask prior = series.labels_or_normal();
  double mx = -std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  double sum = 0.0, sq = 0.0, cnt = 0.0;
  for (Eigen::Index i = 0; i < original.size(); ++i) {
    if (prior[static_cast<std::size_t>(i)]) continue;
    mx = std::max(mx, original[i]);
    mn = std::min(mn, original[i]);
    sum += original[i];
    cnt += 1.0;
  }
  if (cnt == 0.0) throw InvalidArgument("series has no normal points to take statistics from");
  const double mean = sum / cnt;
  for (Eigen::Index i = 0; i < original.size(); ++i)
    if (!prior[static_cast<std::size_t>(i)]) sq += (original[i] - mean) * (original[i] - mean);
  const double range = mx - mn;
  const double sd = std::sqrt(sq / cnt);

  InjectionReport report;
  report.mask = Mask(series.length(), false);
  for (auto [s, e] : regions) {
    const auto b = static_cast<Eigen::Index>(s);
    const auto len = static_cast<Eigen::Index>(e - s);
    switch (spec.kind) {
      case AnomalyKind::Zero:
        x.segment(b, len).setZero();
        break;
      case AnomalyKind::OutOfRange: {
        bool high = spec.side == ExceedSide::High;
        if (spec.side == ExceedSide::Random) high = rng.uniform() < 0.5;
        x.segment(b, len).setConstant(high ? mx + spec.magnitude * range
                                           : mn - spec.magnitude * range);
        break;
      }
      case AnomalyKind::WrongState: {
        const double low = segmentation.mean_level(ControlState::Low);
        const std::vector<double> u(static_cast<std::size_t>(len), low);
        const auto local = OdeParams::single(model->params.at(s), static_cast<std::size_t>(len));
        const auto traj = integrate(*model->structure, local, u, original[b], series.sample_period());
        for (Eigen::Index i = 0; i < len; ++i) x[b + i] = traj[static_cast<std::size_t>(i)];
        break;
      }
      case AnomalyKind::Noise:
        for (Eigen::Index i = 0; i < len; ++i) x[b + i] += rng.normal(0.0, spec.magnitude * sd);
        break;
      case AnomalyKind::Drift: {
        const double delta = mx + spec.magnitude * range - original[b + len - 1];
        for (Eigen::Index i = 0; i < len; ++i)
          x[b + i] += delta * static_cast<double>(i + 1) / static_cast<double>(len);
        break;
      }
    }
    for (std::size_t i = s; i < e; ++i) report.mask[i] = true;
    report.regions.push_back(AnomalyRegion{s, e, spec.kind});
  }

  InjectionResult result{series, std::move(report)};
  result.series.set_channel(dependent_channel, x);
  Mask labels = series.labels_or_normal();
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = labels[i] || result.report.mask[i];
  result.series.set_labels(std::move(labels));
  return result;
}

}  // namespace odeaug
