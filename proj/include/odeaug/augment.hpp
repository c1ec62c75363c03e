#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odeaug/control.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

/// A real (control, dependent) pair reduced to what generation needs.
struct FittedPair {
  PairFeatures features;
  OdeParams params;
  double initial_value = 0.0;
  /// Dependent-channel range of the source pair; scales the divergence guard.
  double dependent_range = 1.0;
  std::string source;
};

struct AugmentationPlan {
  ControlProfile profile;
  std::vector<FittedPair> fitted;
  std::string structure_id = "linear1";
  std::size_t count = 1;
  std::size_t length = 2;
  double sample_period = 1.0;
  std::uint64_t seed = 0;
  std::string control_channel = "control";
  std::string dependent_channel = "dependent";
  double divergence_factor = 1e6;

  void validate() const;
};

struct GeneratedPair {
  TimeSeries series;
  std::size_t donor = 0;
  std::uint64_t seed = 0;
};

/// Seed used for the k-th generated pair; independent of generation order.
std::uint64_t generation_seed(const AugmentationPlan& plan, std::size_t k);

/// Samples a control input, picks the nearest donor by control features, and
/// integrates the donor's ODE under it from the donor's first dependent value.
/// Throws GenerationError (donor index, seed) on divergence.
GeneratedPair generate_series_pair(const AugmentationPlan& plan, std::size_t k);

std::vector<GeneratedPair> generate_all(const AugmentationPlan& plan);

/// Builds the FittedPair record for one real series.
FittedPair make_fitted_pair(const TimeSeries& series, const std::string& control_channel,
                            const std::string& dependent_channel, const OdeParams& params,
                            const StateSegmentation& segmentation, std::string source = {});

}  // namespace odeaug
