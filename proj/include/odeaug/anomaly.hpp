#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odeaug/control.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

/// Injected anomaly types, in the order 1..5.
enum class AnomalyKind { Zero, OutOfRange, WrongState, Noise, Drift };

const char* to_string(AnomalyKind k);
AnomalyKind anomaly_kind_from_string(const std::string& s);

/// Whether a kind must be placed inside HIGH control segments.
bool requires_high_state(AnomalyKind k);

/// Region length: a fixed sample count, or a uniform fraction of the host
/// segment when `samples` is zero.
struct AnomalyDuration {
  std::size_t samples = 0;
  double min_fraction = 0.25;
  double max_fraction = 0.75;

  static AnomalyDuration fixed(std::size_t n) { return {n, 0.0, 0.0}; }
  static AnomalyDuration fraction(double lo, double hi) { return {0, lo, hi}; }
};

enum class ExceedSide { Random, High, Low };

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::Zero;
  AnomalyDuration duration;
  double magnitude = 0.0;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  ExceedSide side = ExceedSide::Random;

  /// Defaults per kind: fractional durations for ZERO, OUT_OF_RANGE and
  /// WRONG_STATE; 20 samples for NOISE and DRIFT; magnitudes 0.1, 3.0, 0.1.
  static AnomalySpec defaults(AnomalyKind kind, std::uint64_t seed = 0);
  void validate() const;
};

struct AnomalyRegion {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  AnomalyKind kind = AnomalyKind::Zero;

  std::size_t size() const { return end - start; }
  bool operator==(const AnomalyRegion&) const = default;
};

struct InjectionReport {
  std::vector<AnomalyRegion> regions;
  Mask mask;
};

/// Non-overlapping regions drawn uniformly over eligible positions. Kinds
/// other than NOISE are confined to HIGH segments. `occupied` regions are
/// avoided as well. Throws PlacementError when no placement exists.
std::vector<std::pair<std::size_t, std::size_t>> pick_injection_regions(
    const StateSegmentation& segmentation, const AnomalySpec& spec, std::size_t series_length,
    Rng& rng, const std::vector<AnomalyRegion>& occupied = {});

/// Fitted model used to synthesize WRONG_STATE behaviour.
struct InjectionModel {
  const OdeStructure* structure = nullptr;
  OdeParams params;
};

struct InjectionResult {
  TimeSeries series;
  InjectionReport report;
};

/// Injects `spec.count` anomalies of one kind into the dependent channel.
/// Channel statistics (min, max, std) are taken from the points of the
/// input series not already labeled anomalous.
/// Points outside the injected regions are left untouched; prior labels are
/// preserved and injected points become anomalous.
InjectionResult inject(const TimeSeries& series, const std::string& dependent_channel,
                       const StateSegmentation& segmentation,
                       const std::optional<InjectionModel>& model, const AnomalySpec& spec,
                       const std::vector<AnomalyRegion>& occupied = {});

}  // namespace odeaug
