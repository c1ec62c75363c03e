#include "odeaug/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odeaug/error.hpp"

namespace odeaug {

const char* to_string(ControlState s) { return s == ControlState::High ? "HIGH" : "LOW"; }

std::vector<ControlState> StateSegmentation::states() const {
  std::vector<ControlState> out;
  out.reserve(length());
  for (const auto& s : segments) out.insert(out.end(), s.duration, s.state);
  return out;
}

bool StateSegmentation::has_state(ControlState s) const {
  return std::any_of(segments.begin(), segments.end(),
                     [s](const Segment& g) { return g.state == s; });
}

double StateSegmentation::mean_level(ControlState s) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : segments)
    if (g.state == s) {
      sum += g.level;
      ++n;
    }
  if (n == 0) throw InvalidArgument(std::string("segmentation has no ") + to_string(s) + " segment");
  return sum / static_cast<double>(n);
}

namespace {

double two_means_threshold(const Eigen::VectorXd& x, bool& degenerate) {
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  const double range = hi - lo;
  double c_lo = lo;
  double c_hi = hi;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (c_lo + c_hi);
    double s_lo = 0.0, s_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (double v : x) {
      if (v > mid) {
        s_hi += v;
        ++n_hi;
      } else {
        s_lo += v;
        ++n_lo;
      }
    }
    const double new_lo = n_lo ? s_lo / static_cast<double>(n_lo) : c_lo;
    const double new_hi = n_hi ? s_hi / static_cast<double>(n_hi) : c_hi;
    if (new_lo == c_lo && new_hi == c_hi) break;
    c_lo = new_lo;
    c_hi = new_hi;
  }
  degenerate = range == 0.0 || (c_hi - c_lo) < 1e-9 * range;
  return 0.5 * (c_lo + c_hi);
}

struct Run {
  ControlState state;
  std::size_t start;
  std::size_t duration;
};

void coalesce(std::vector<Run>& runs) {
  std::vector<Run> out;
  for (const auto& r : runs) {
    if (!out.empty() && out.back().state == r.state)
      out.back().duration += r.duration;
    else
      out.push_back(r);
  }
  runs = std::move(out);
}

}  // namespace

StateSegmentation segment_control(const Eigen::VectorXd& x, std::optional<double> threshold,
                                  std::size_t min_duration) {
  const auto n = static_cast<std::size_t>(x.size());
  if (min_duration < 1) throw InvalidArgument("min_duration must be at least 1");
  if (n == 0 || n < 2 * min_duration)
    throw InvalidArgument("control channel shorter than twice min_duration");

  StateSegmentation seg;
  if (threshold) {
    seg.threshold = *threshold;
  } else {
    seg.threshold = two_means_threshold(x, seg.degenerate);
    if (seg.degenerate) {
      seg.segments.push_back(Segment{ControlState::Low, 0, n, x.mean()});
      return seg;
    }
  }

  std::vector<Run> runs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = x[static_cast<Eigen::Index>(i)] > seg.threshold ? ControlState::High
                                                                   : ControlState::Low;
    if (!runs.empty() && runs.back().state == s)
      ++runs.back().duration;
    else
      runs.push_back(Run{s, i, 1});
  }

  while (runs.size() > 1) {
    std::size_t victim = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (runs[i].duration < min_duration &&
          (victim == runs.size() || runs[i].duration < runs[victim].duration))
        victim = i;
    if (victim == runs.size()) break;
    std::size_t into;
    if (victim == 0)
      into = 1;
    else if (victim + 1 == runs.size())
      into = victim - 1;
    else
      into = runs[victim + 1].duration > runs[victim - 1].duration ? victim + 1 : victim - 1;
    runs[victim].state = runs[into].state;
    coalesce(runs);
  }

  for (const auto& r : runs) {
    const double level =
        x.segment(static_cast<Eigen::Index>(r.start), static_cast<Eigen::Index>(r.duration)).mean();
    seg.segments.push_back(Segment{r.state, r.start, r.duration, level});
  }
  return seg;
}

StateSegmentation segment_control(const TimeSeries& series, const std::string& channel,
                                  std::optional<double> threshold, std::size_t min_duration) {
  return segment_control(series.channel(channel), threshold, min_duration);
}

std::vector<std::size_t> cycle_window_breaks(const StateSegmentation& segmentation) {
  std::vector<std::size_t> breaks;
  const auto& segs = segmentation.segments;
  for (std::size_t i = 2; i < segs.size(); i += 2) breaks.push_back(segs[i].start);
  // A trailing lone segment joins the previous cycle.
  if (segs.size() > 2 && segs.size() % 2 == 1) breaks.pop_back();
  return breaks;
}

Histogram Histogram::build(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  Histogram h;
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double hi = *mx;
  if (!(hi > lo)) {
    const double half = 0.5 * std::max(1e-6 * std::abs(lo), 1e-9);
    h.edges = {lo - half, lo + half};
    h.counts = {values.size()};
    return h;
  }
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double Histogram::implied_mean() const {
  const auto t = total();
  if (t == 0) throw InvalidArgument("empty histogram has no mean");
  double s = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    s += static_cast<double>(counts[i]) * 0.5 * (edges[i] + edges[i + 1]);
  return s / static_cast<double>(t);
}

double Histogram::sample(Rng& rng) const {
  if (empty()) throw InvalidArgument("cannot sample an empty histogram");
  const auto b = rng.discrete(std::span<const std::size_t>(counts));
  return rng.uniform(edges[b], edges[b + 1]);
}

ControlProfile build_profile(const std::vector<StateSegmentation>& segmentations,
                             std::size_t bins) {
  if (segmentations.empty()) throw InvalidArgument("no segmentations to build a profile from");
  std::vector<double> hd, hl, ld, ll;
  ControlProfile p;
  bool any_both = false;
  for (const auto& seg : segmentations) {
    if (seg.segments.empty()) continue;
    if (seg.segments.front().state == ControlState::High)
      ++p.start_high;
    else
      ++p.start_low;
    any_both = any_both || (seg.has_state(ControlState::High) && seg.has_state(ControlState::Low));
    for (const auto& g : seg.segments) {
      auto& d = g.state == ControlState::High ? hd : ld;
      auto& l = g.state == ControlState::High ? hl : ll;
      d.push_back(static_cast<double>(g.duration));
      l.push_back(g.level);
    }
  }
  p.source_count = segmentations.size();
  p.single_state = !any_both;
  p.high = StateProfile{Histogram::build(hd, bins), Histogram::build(hl, bins)};
  p.low = StateProfile{Histogram::build(ld, bins), Histogram::build(ll, bins)};
  return p;
}

SampledControl sample_control(const ControlProfile& profile, std::size_t length,
                              std::uint64_t seed) {
  if (length < 1) throw InvalidArgument("sampled control length must be at least 1");
  for (auto s : {ControlState::High, ControlState::Low}) {
    const auto& sp = profile.of(s);
    if (sp.duration.empty() || sp.level.empty())
      throw InvalidArgument(std::string("profile has no ") + to_string(s) + " statistics");
  }
  Rng rng(seed);
  const std::array<std::size_t, 2> starts{profile.start_high, profile.start_low};
  ControlState state = (starts[0] + starts[1] == 0 || rng.discrete(std::span<const std::size_t>(starts)) == 0)
                           ? ControlState::High
                           : ControlState::Low;
  SampledControl out;
  out.values.resize(static_cast<Eigen::Index>(length));
  std::size_t pos = 0;
  while (pos < length) {
    const auto& sp = profile.of(state);
    const double raw = sp.duration.sample(rng);
    auto duration = static_cast<std::size_t>(std::max(1.0, std::round(raw)));
    const double level = sp.level.sample(rng);
    duration = std::min(duration, length - pos);
    out.values.segment(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(duration))
        .setConstant(level);
    out.segmentation.segments.push_back(Segment{state, pos, duration, level});
    pos += duration;
    state = state == ControlState::High ? ControlState::Low : ControlState::High;
  }
  out.segmentation.threshold =
      0.5 * (profile.high.level.implied_mean() + profile.low.level.implied_mean());
  return out;
}

PairFeatures pair_features(const StateSegmentation& segmentation, const ControlProfile* fallback) {
  PairFeatures f;
  auto fill = [&](ControlState s, double& dur, double& lev) {
    double ds = 0.0, ls = 0.0;
    std::size_t n = 0;
    for (const auto& g : segmentation.segments)
      if (g.state == s) {
        ds += static_cast<double>(g.duration);
        ls += g.level;
        ++n;
      }
    if (n > 0) {
      dur = ds / static_cast<double>(n);
      lev = ls / static_cast<double>(n);
    } else if (fallback) {
      dur = std::max(1.0, fallback->of(s).duration.implied_mean());
      lev = fallback->of(s).level.implied_mean();
    } else {
      throw InvalidArgument(std::string("segmentation has no ") + to_string(s) + " segment");
    }
  };
  fill(ControlState::High, f.mean_high_duration, f.mean_high_level);
  fill(ControlState::Low, f.mean_low_duration, f.mean_low_level);
  return f;
}

std::size_t select_donor(const PairFeatures& synthetic, std::span<const PairFeatures> training) {
  if (training.empty()) throw InvalidArgument("no training pairs to select a donor from");
  const double n = static_cast<double>(training.size());
  std::array<double, 4> mean{}, sd{};
  for (const auto& t : training) {
    const auto a = t.as_array();
    for (int j = 0; j < 4; ++j) mean[j] += a[j] / n;
  }
  for (const auto& t : training) {
    const auto a = t.as_array();
    for (int j = 0; j < 4; ++j) sd[j] += (a[j] - mean[j]) * (a[j] - mean[j]) / n;
  }
  for (auto& s : sd) s = std::max(std::sqrt(s), 1e-12);

  const auto syn = synthetic.as_array();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto a = training[i].as_array();
    double d = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double z = (a[j] - syn[j]) / sd[j];
      d += z * z;
    }
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace odeaug
