#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odeaug/random.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

enum class ControlState { Low, High };

const char* to_string(ControlState s);

struct Segment {
  ControlState state = ControlState::Low;
  std::size_t start = 0;
  std::size_t duration = 0;
  double level = 0.0;

  std::size_t end() const { return start + duration; }
};

struct StateSegmentation {
  std::vector<Segment> segments;
  double threshold = 0.0;
  /// Set when AUTO thresholding found no separable second level.
  bool degenerate = false;

  std::size_t length() const { return segments.empty() ? 0 : segments.back().end(); }
  /// Per-sample state sequence.
  std::vector<ControlState> states() const;
  double mean_level(ControlState s) const;
  bool has_state(ControlState s) const;
};

/// Two-state segmentation of a control channel. Samples strictly above the
/// threshold are HIGH. Runs shorter than `min_duration` are absorbed by the
/// longer neighbouring run, shortest first. Without an explicit threshold the
/// midpoint of a 1-D two-means clustering is used.
StateSegmentation segment_control(const Eigen::VectorXd& channel, std::optional<double> threshold,
                                  std::size_t min_duration = 2);
StateSegmentation segment_control(const TimeSeries& series, const std::string& channel,
                                  std::optional<double> threshold, std::size_t min_duration = 2);

/// Sample indices where a new (LOW, HIGH) cycle starts; suitable as ODE
/// window breaks.
std::vector<std::size_t> cycle_window_breaks(const StateSegmentation& segmentation);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  /// Equal-width bins over [min, max]; a single distinct value gets one
  /// narrow bin around it.
  static Histogram build(std::span<const double> values, std::size_t bins);

  std::size_t total() const;
  bool empty() const { return total() == 0; }
  /// Mean implied by bin centers weighted by counts.
  double implied_mean() const;
  /// Bin drawn proportionally to counts, then uniform within the bin.
  double sample(Rng& rng) const;
};

struct StateProfile {
  Histogram duration;
  Histogram level;
};

struct ControlProfile {
  StateProfile high;
  StateProfile low;
  std::size_t start_high = 0;
  std::size_t start_low = 0;
  std::size_t source_count = 0;
  /// Set when no contributing segmentation contains both states.
  bool single_state = false;

  const StateProfile& of(ControlState s) const { return s == ControlState::High ? high : low; }
};

ControlProfile build_profile(const std::vector<StateSegmentation>& segmentations,
                             std::size_t bins = 10);

struct SampledControl {
  Eigen::VectorXd values;
  StateSegmentation segmentation;
};

/// Alternating piecewise-constant control of `length` samples drawn from the
/// profile. The final segment is truncated to fit.
SampledControl sample_control(const ControlProfile& profile, std::size_t length,
                              std::uint64_t seed);

struct PairFeatures {
  double mean_high_duration = 1.0;
  double mean_low_duration = 1.0;
  double mean_high_level = 0.0;
  double mean_low_level = 0.0;

  std::array<double, 4> as_array() const {
    return {mean_high_duration, mean_low_duration, mean_high_level, mean_low_level};
  }
  bool operator==(const PairFeatures&) const = default;
};

/// Per-state mean duration and level. A state missing from the segmentation
/// takes the profile's implied means when a profile is given; otherwise
/// InvalidArgument is thrown.
PairFeatures pair_features(const StateSegmentation& segmentation,
                           const ControlProfile* fallback = nullptr);

/// Index of the training features nearest to `synthetic` after z-scoring
/// each coordinate over the training list. Ties go to the lowest index.
std::size_t select_donor(const PairFeatures& synthetic, std::span<const PairFeatures> training);

}  // namespace odeaug
