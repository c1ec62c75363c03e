#pragma once

// JSON documents for fitted models, profiles, detectors and configs.

#include <string>

#include "json.hpp"
#include "odeaug/anomaly.hpp"
#include "odeaug/augment.hpp"
#include "odeaug/benchmark.hpp"
#include "odeaug/control.hpp"
#include "odeaug/experiment.hpp"
#include "odeaug/lstm.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/scorer.hpp"

namespace odeaug {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

void to_json(json& j, const ParamWindow& w);
void from_json(const json& j, ParamWindow& w);
void to_json(json& j, const OdeParams& p);
void from_json(const json& j, OdeParams& p);
void to_json(json& j, const SgdConfig& c);
void from_json(const json& j, SgdConfig& c);
void to_json(json& j, const PsoConfig& c);
void from_json(const json& j, PsoConfig& c);
void to_json(json& j, const FitConfig& c);
void from_json(const json& j, FitConfig& c);
void to_json(json& j, const Candidate& c);
void from_json(const json& j, Candidate& c);
void to_json(json& j, const FitReport& r);
void from_json(const json& j, FitReport& r);

void to_json(json& j, const Histogram& h);
void from_json(const json& j, Histogram& h);
void to_json(json& j, const ControlProfile& p);
void from_json(const json& j, ControlProfile& p);
void to_json(json& j, const PairFeatures& f);
void from_json(const json& j, PairFeatures& f);
void to_json(json& j, const FittedPair& f);
void from_json(const json& j, FittedPair& f);

void to_json(json& j, const AnomalySpec& s);
void from_json(const json& j, AnomalySpec& s);
void to_json(json& j, const AnomalyRegion& r);
void from_json(const json& j, AnomalyRegion& r);

void to_json(json& j, const Normalization& n);
void from_json(const json& j, Normalization& n);
void to_json(json& j, const TrainingConfig& c);
void from_json(const json& j, TrainingConfig& c);
void to_json(json& j, const PredictorConfig& c);
void from_json(const json& j, PredictorConfig& c);
void to_json(json& j, const LstmNetwork& n);
void from_json(const json& j, LstmNetwork& n);
void to_json(json& j, const GaussianScorer& s);
void from_json(const json& j, GaussianScorer& s);
void to_json(json& j, const Detector& d);
void from_json(const json& j, Detector& d);

void to_json(json& j, const ControlGenerator& c);
void from_json(const json& j, ControlGenerator& c);
void to_json(json& j, const BenchmarkConfig& c);
void from_json(const json& j, BenchmarkConfig& c);
void to_json(json& j, const ExperimentConfig& c);
void from_json(const json& j, ExperimentConfig& c);
void to_json(json& j, const MetricsRow& r);
void to_json(json& j, const MetricsReport& r);

json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace odeaug
