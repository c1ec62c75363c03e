#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "odeaug/augment.hpp"
#include "odeaug/benchmark.hpp"
#include "odeaug/lstm.hpp"
#include "odeaug/metrics.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/scorer.hpp"

namespace odeaug {

enum class Regime { Large, Small, Ode, SmallPlusOde, LargePlusOde };

/// "L(r)", "S(r)", "ODE(s)", "S(r)+ODE(s)", "L(r)+ODE(s)".
std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);
std::vector<Regime> all_regimes();

struct ExperimentConfig {
  /// Candidate layer stacks; the one with the best validation F is kept.
  std::vector<std::vector<std::size_t>> architectures{{16}, {32}, {64}, {16, 16}, {32, 32}, {64, 64}};
  /// Template for every trained predictor; channels default to
  /// (control, dependent) -> dependent when left empty.
  PredictorConfig predictor;
  double ridge = 1e-6;
  bool diagonal_covariance = false;
  double beta = 1.0;
  /// Generated series count; about three times the small set.
  std::size_t ode_count = 24;
  FitConfig fit;
  std::size_t min_duration = 2;
  std::size_t histogram_bins = 10;
  std::uint64_t seed = 0;
  /// Run regimes concurrently; results are identical to the sequential run.
  bool parallel = false;
};

/// Trained predictor, scorer and threshold.
struct Detector {
  PredictorConfig config;
  LstmNetwork network;
  GaussianScorer scorer;
};

struct MetricsRow {
  std::string regime;
  std::size_t ns = 0;
  std::size_t np = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::vector<std::size_t> architecture;
  double threshold = 0.0;
  double validation_f = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::uint64_t seed = 0;
  ExperimentConfig config;

  const MetricsRow& row(const std::string& regime) const;
};

/// ODE fits on the small set, the control profile, and the generated series.
struct Augmentation {
  std::vector<FitReport> fits;
  AugmentationPlan plan;
  std::vector<GeneratedPair> generated;
};

Augmentation build_augmentation(const Benchmark& benchmark, const ExperimentConfig& config);

struct TrainedOutcome {
  Detector detector;
  MetricsRow row;
};

/// Architecture search, Gaussian fit on validation-N, threshold on
/// validation-A, evaluation on the test set.
TrainedOutcome train_and_evaluate(const std::string& regime, const std::vector<TimeSeries>& training,
                                  const Benchmark& benchmark, const ExperimentConfig& config);

/// Fits the Gaussian on validation-N error vectors and picks the threshold
/// maximizing F_beta on validation-A.
Detector calibrate_detector(LstmNetwork network, const PredictorConfig& predictor,
                            const std::vector<TimeSeries>& validation_normal,
                            const std::vector<TimeSeries>& validation_anomalous, double ridge,
                            bool diagonal, double beta, ThresholdChoice* choice = nullptr);

/// Fits a detector without evaluating it on the test set.
Detector fit_detector(const std::vector<TimeSeries>& training,
                      const std::vector<TimeSeries>& validation_normal,
                      const std::vector<TimeSeries>& validation_anomalous,
                      const PredictorConfig& predictor, const ExperimentConfig& config,
                      double* validation_f = nullptr);

/// Point-wise metrics of a detector over labeled series (masks concatenated).
Prf evaluate_detector(const Detector& detector, const std::vector<TimeSeries>& labeled,
                      double beta = 1.0);

MetricsReport run_experiment(const Benchmark& benchmark, const std::vector<Regime>& regimes,
                             const ExperimentConfig& config);

struct CurvePoint {
  double fraction = 0.0;
  std::size_t generated = 0;
  double f_score = 0.0;
};

/// F on the test set when training on the small set plus the first
/// floor(q * count) generated series, for each fraction q.
std::vector<CurvePoint> augmentation_curve(const Benchmark& benchmark,
                                           const std::vector<double>& fractions,
                                           const ExperimentConfig& config);

void write_report_text(std::ostream& out, const MetricsReport& report);
void write_report_csv(std::ostream& out, const MetricsReport& report);
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace odeaug
