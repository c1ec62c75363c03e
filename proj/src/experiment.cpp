#include "odeaug/experiment.hpp"

#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "odeaug/control.hpp"
#include "odeaug/error.hpp"
#include "odeaug/random.hpp"

namespace odeaug {

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::Large: return "L(r)";
    case Regime::Small: return "S(r)";
    case Regime::Ode: return "ODE(s)";
    case Regime::SmallPlusOde: return "S(r)+ODE(s)";
    case Regime::LargePlusOde: return "L(r)+ODE(s)";
  }
  return "?";
}

Regime regime_from_name(const std::string& name) {
  for (auto r : all_regimes())
    if (regime_name(r) == name) return r;
  throw InvalidArgument("unknown regime '" + name + "'");
}

std::vector<Regime> all_regimes() {
  return {Regime::Large, Regime::Small, Regime::Ode, Regime::SmallPlusOde, Regime::LargePlusOde};
}

const MetricsRow& MetricsReport::row(const std::string& regime) const {
  for (const auto& r : rows)
    if (r.regime == regime) return r;
  throw InvalidArgument("report has no row for regime '" + regime + "'");
}

Augmentation build_augmentation(const Benchmark& benchmark, const ExperimentConfig& config) {
  const auto& bc = benchmark.config;
  Augmentation aug;
  std::vector<StateSegmentation> segs;
  for (std::size_t i = 0; i < benchmark.small.size(); ++i) {
    const auto& s = benchmark.small[i];
    const auto pair = SeriesPair::from_series(s, bc.control_channel, bc.dependent_channel);
    FitConfig fc = config.fit;
    fc.sgd.seed = derive_seed(derive_seed(config.seed, "sgd"), i);
    fc.pso.seed = derive_seed(derive_seed(config.seed, "pso"), i);
    segs.push_back(segment_control(s, bc.control_channel, std::nullopt, config.min_duration));
    aug.fits.push_back(fit(pair, linear1(), fc));
    aug.plan.fitted.push_back(make_fitted_pair(s, bc.control_channel, bc.dependent_channel,
                                               aug.fits.back().params, segs.back(),
                                               "small/" + std::to_string(i)));
  }
  aug.plan.profile = build_profile(segs, config.histogram_bins);
  aug.plan.structure_id = "linear1";
  aug.plan.count = config.ode_count;
  aug.plan.length = bc.series_length;
  aug.plan.sample_period = bc.sample_period;
  aug.plan.seed = derive_seed(config.seed, "augment");
  aug.plan.control_channel = bc.control_channel;
  aug.plan.dependent_channel = bc.dependent_channel;
  aug.plan.divergence_factor = config.fit.divergence_factor;
  if (config.ode_count > 0) aug.generated = generate_all(aug.plan);
  return aug;
}

namespace {

PredictorConfig resolved_predictor(const ExperimentConfig& config, const BenchmarkConfig& bc) {
  PredictorConfig p = config.predictor;
  if (p.input_channels.empty()) p.input_channels = {bc.control_channel, bc.dependent_channel};
  if (p.predicted_channels.empty()) p.predicted_channels = {bc.dependent_channel};
  p.normalization = {};
  return p;
}

}  // namespace

Detector calibrate_detector(LstmNetwork network, const PredictorConfig& predictor,
                            const std::vector<TimeSeries>& validation_normal,
                            const std::vector<TimeSeries>& validation_anomalous, double ridge,
                            bool diagonal, double beta, ThresholdChoice* choice) {
  if (validation_normal.empty() || validation_anomalous.empty())
    throw InvalidArgument("calibration needs normal and anomalous validation series");
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index rows = 0;
  for (const auto& s : validation_normal) {
    blocks.push_back(error_vectors(network, predictor, s).e);
    rows += blocks.back().rows();
  }
  Eigen::MatrixXd stacked(rows, static_cast<Eigen::Index>(predictor.output_size()));
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    stacked.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  GaussianScorer scorer = fit_gaussian(stacked, ridge, diagonal);

  std::vector<double> scores;
  Mask labels;
  for (const auto& s : validation_anomalous) {
    const auto sc = score_series(network, predictor, scorer, s);
    const Mask lab = s.labels_or_normal();
    for (std::size_t i = 0; i < sc.size(); ++i)
      if (!std::isnan(sc[i])) {
        scores.push_back(sc[i]);
        labels.push_back(lab[i]);
      }
  }
  const ThresholdChoice c = select_threshold(scores, labels, beta);
  scorer.set_threshold(c.threshold);
  if (choice) *choice = c;
  return Detector{predictor, std::move(network), std::move(scorer)};
}

Detector fit_detector(const std::vector<TimeSeries>& training,
                      const std::vector<TimeSeries>& validation_normal,
                      const std::vector<TimeSeries>& validation_anomalous,
                      const PredictorConfig& predictor, const ExperimentConfig& config,
                      double* validation_f) {
  if (config.architectures.empty()) throw InvalidArgument("no architectures to search");
  std::optional<Detector> best;
  double best_f = -1.0;
  for (std::size_t a = 0; a < config.architectures.size(); ++a) {
    PredictorConfig pc = predictor;
    pc.layer_sizes = config.architectures[a];
    pc.training.seed = derive_seed(derive_seed(config.seed, "lstm"), a);
    TrainResult tr = train(training, validation_normal, pc);
    ThresholdChoice choice;
    Detector det = calibrate_detector(std::move(tr.network), tr.config, validation_normal,
                                      validation_anomalous, config.ridge, config.diagonal_covariance,
                                      config.beta, &choice);
    if (choice.f_score > best_f) {
      best_f = choice.f_score;
      best = std::move(det);
    }
  }
  if (validation_f) *validation_f = best_f;
  return std::move(*best);
}

Prf evaluate_detector(const Detector& detector, const std::vector<TimeSeries>& labeled,
                      double beta) {
  Mask predicted, actual;
  for (const auto& s : labeled) {
    const Mask m = detect(detector.network, detector.config, detector.scorer, s);
    const Mask l = s.labels_or_normal();
    predicted.insert(predicted.end(), m.begin(), m.end());
    actual.insert(actual.end(), l.begin(), l.end());
  }
  return prf_metrics(predicted, actual, beta);
}

TrainedOutcome train_and_evaluate(const std::string& regime, const std::vector<TimeSeries>& training,
                                  const Benchmark& benchmark, const ExperimentConfig& config) {
  try {
    double vf = 0.0;
    Detector det = fit_detector(training, benchmark.validation_normal,
                                benchmark.validation_anomalous.series,
                                resolved_predictor(config, benchmark.config), config, &vf);
    const Prf prf = evaluate_detector(det, benchmark.test.series, config.beta);
    MetricsRow row;
    row.regime = regime;
    row.ns = training.size();
    for (const auto& s : training) row.np += s.length();
    row.precision = prf.precision;
    row.recall = prf.recall;
    row.f_score = prf.f_score;
    row.architecture = det.config.layer_sizes;
    row.threshold = *det.scorer.threshold();
    row.validation_f = vf;
    return TrainedOutcome{std::move(det), std::move(row)};
  } catch (const Error& e) {
    throw Error("regime " + regime + ": " + e.what());
  }
}

namespace {

std::vector<TimeSeries> concat(const std::vector<TimeSeries>& a, const std::vector<GeneratedPair>& g,
                               std::size_t take) {
  std::vector<TimeSeries> out = a;
  for (std::size_t i = 0; i < take && i < g.size(); ++i) out.push_back(g[i].series);
  return out;
}

}  // namespace

MetricsReport run_experiment(const Benchmark& benchmark, const std::vector<Regime>& regimes,
                             const ExperimentConfig& config) {
  if (regimes.empty()) throw InvalidArgument("no regimes requested");
  MetricsReport report;
  report.seed = config.seed;
  report.config = config;

  bool needs_ode = false;
  for (auto r : regimes)
    needs_ode = needs_ode || r == Regime::Ode || r == Regime::SmallPlusOde || r == Regime::LargePlusOde;
  Augmentation aug;
  if (needs_ode) {
    try {
      aug = build_augmentation(benchmark, config);
    } catch (const Error& e) {
      throw Error(std::string("regime ODE(s): ") + e.what());
    }
  }

  auto training_for = [&](Regime r) {
    switch (r) {
      case Regime::Large: return benchmark.large;
      case Regime::Small: return benchmark.small;
      case Regime::Ode: return concat({}, aug.generated, aug.generated.size());
      case Regime::SmallPlusOde: return concat(benchmark.small, aug.generated, aug.generated.size());
      case Regime::LargePlusOde: return concat(benchmark.large, aug.generated, aug.generated.size());
    }
    return std::vector<TimeSeries>{};
  };

  if (config.parallel) {
    std::vector<std::future<TrainedOutcome>> futures;
    for (auto r : regimes)
      futures.push_back(std::async(std::launch::async, [&, r] {
        return train_and_evaluate(regime_name(r), training_for(r), benchmark, config);
      }));
    for (auto& f : futures) report.rows.push_back(f.get().row);
  } else {
    for (auto r : regimes)
      report.rows.push_back(train_and_evaluate(regime_name(r), training_for(r), benchmark, config).row);
  }
  return report;
}

std::vector<CurvePoint> augmentation_curve(const Benchmark& benchmark,
                                           const std::vector<double>& fractions,
                                           const ExperimentConfig& config) {
  if (fractions.empty() || fractions.front() != 0.0)
    throw InvalidArgument("curve fractions must start at 0");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] < 0.0 || fractions[i] > 1.0) throw InvalidArgument("curve fractions must lie in [0, 1]");
    if (i > 0 && fractions[i] < fractions[i - 1]) throw InvalidArgument("curve fractions must be ascending");
  }
  Augmentation aug;
  try {
    aug = build_augmentation(benchmark, config);
  } catch (const Error& e) {
    throw Error(std::string("regime ODE(s): ") + e.what());
  }
  std::vector<CurvePoint> out;
  for (double q : fractions) {
    const auto take = static_cast<std::size_t>(std::floor(q * static_cast<double>(aug.generated.size())));
    const std::string name = take == 0 ? regime_name(Regime::Small)
                                       : "S(r)+" + std::to_string(take) + " ODE(s)";
    const auto res = train_and_evaluate(name, concat(benchmark.small, aug.generated, take), benchmark, config);
    out.push_back(CurvePoint{q, take, res.row.f_score});
  }
  return out;
}

namespace {

std::string arch_string(const std::vector<std::size_t>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "x" : "") + std::to_string(a[i]);
  return s;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

void write_report_text(std::ostream& out, const MetricsReport& report) {
  out << std::left << std::setw(14) << "Train dataset" << std::right << std::setw(6) << "NS"
      << std::setw(9) << "NP" << std::setw(8) << "P" << std::setw(8) << "R" << std::setw(8) << "F"
      << "  arch\n";
  for (const auto& r : report.rows)
    out << std::left << std::setw(14) << r.regime << std::right << std::setw(6) << r.ns
        << std::setw(9) << r.np << std::setw(8) << fixed(r.precision, 3) << std::setw(8)
        << fixed(r.recall, 3) << std::setw(8) << fixed(r.f_score, 3) << "  "
        << arch_string(r.architecture) << '\n';
  out << "seed " << report.seed << '\n';
}

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  out << "regime,ns,np,precision,recall,f_score,architecture,threshold,validation_f\n";
  for (const auto& r : report.rows)
    out << r.regime << ',' << r.ns << ',' << r.np << ',' << format_double(r.precision) << ','
        << format_double(r.recall) << ',' << format_double(r.f_score) << ','
        << arch_string(r.architecture) << ',' << format_double(r.threshold) << ','
        << format_double(r.validation_f) << '\n';
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "fraction,generated,f_score\n";
  for (const auto& p : curve)
    out << format_double(p.fraction) << ',' << p.generated << ',' << format_double(p.f_score) << '\n';
}

}  // namespace odeaug
