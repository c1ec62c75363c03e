#include "odeaug/augment.hpp"

#include "odeaug/error.hpp"
#include "odeaug/random.hpp"

namespace odeaug {

void AugmentationPlan::validate() const {
  if (fitted.empty()) throw InvalidArgument("augmentation plan has no fitted pairs");
  if (length < 2) throw InvalidArgument("generated length must be at least 2");
  if (count < 1) throw InvalidArgument("generation count must be at least 1");
  if (!(sample_period > 0.0)) throw InvalidArgument("sample period must be positive");
  if (control_channel == dependent_channel)
    throw InvalidArgument("control and dependent channel names must differ");
  const auto& s = structure_by_id(structure_id);
  for (const auto& f : fitted) f.params.validate(s);
}

std::uint64_t generation_seed(const AugmentationPlan& plan, std::size_t k) {
  return derive_seed(plan.seed, static_cast<std::uint64_t>(k));
}

GeneratedPair generate_series_pair(const AugmentationPlan& plan, std::size_t k) {
  if (k >= plan.count) throw InvalidArgument("generation index out of range");
  plan.validate();
  const auto& structure = structure_by_id(plan.structure_id);
  const std::uint64_t seed = generation_seed(plan, k);

  SampledControl control = sample_control(plan.profile, plan.length, seed);
  const PairFeatures features = pair_features(control.segmentation, &plan.profile);
  std::vector<PairFeatures> training;
  training.reserve(plan.fitted.size());
  for (const auto& f : plan.fitted) training.push_back(f.features);
  const std::size_t donor = select_donor(features, training);
  const FittedPair& d = plan.fitted[donor];

  const double scale = d.dependent_range > 0.0 ? d.dependent_range : std::abs(d.initial_value) + 1.0;
  std::vector<double> dep;
  try {
    dep = integrate(structure, d.params.retarget(plan.length),
                    std::span<const double>(control.values.data(), plan.length), d.initial_value,
                    plan.sample_period, plan.divergence_factor * scale);
  } catch (const DivergenceError& e) {
    throw GenerationError(donor, seed,
                          "generation " + std::to_string(k) + " with donor " +
                              std::to_string(donor) + " and seed " + std::to_string(seed) +
                              " diverged: " + e.what());
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(plan.length), 2);
  values.col(0) = control.values;
  values.col(1) = Eigen::Map<const Eigen::VectorXd>(dep.data(), static_cast<Eigen::Index>(dep.size()));
  return GeneratedPair{
      TimeSeries({plan.control_channel, plan.dependent_channel}, plan.sample_period, std::move(values)),
      donor, seed};
}

std::vector<GeneratedPair> generate_all(const AugmentationPlan& plan) {
  std::vector<GeneratedPair> out;
  out.reserve(plan.count);
  for (std::size_t k = 0; k < plan.count; ++k) out.push_back(generate_series_pair(plan, k));
  return out;
}

FittedPair make_fitted_pair(const TimeSeries& series, const std::string& control_channel,
                            const std::string& dependent_channel, const OdeParams& params,
                            const StateSegmentation& segmentation, std::string source) {
  const Eigen::VectorXd dep = series.channel(dependent_channel);
  series.channel_index(control_channel);
  FittedPair f;
  f.features = pair_features(segmentation);
  f.params = params;
  f.initial_value = dep[0];
  f.dependent_range = dep.maxCoeff() - dep.minCoeff();
  f.source = std::move(source);
  return f;
}

}  // namespace odeaug
