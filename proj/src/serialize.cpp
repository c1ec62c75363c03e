#include "odeaug/serialize.hpp"

#include <fstream>

#include "odeaug/error.hpp"

namespace odeaug {

namespace {

/// Reads `key` into `field` when present; keeps the default otherwise.
template <class T>
void opt(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) it->get_to(field);
}

json matrix_json(const Eigen::MatrixXd& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw InvalidArgument("matrix data does not match its declared dimensions");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

void check_version(const json& j, const char* what) {
  if (!j.contains("version")) throw InvalidArgument(std::string(what) + " document has no version field");
  if (j.at("version").get<int>() != kFormatVersion)
    throw InvalidArgument(std::string(what) + " document has unsupported version");
}

}  // namespace

void to_json(json& j, const ParamWindow& w) {
  j = json{{"start", w.start}, {"end", w.end}, {"params", w.params}};
}
void from_json(const json& j, ParamWindow& w) {
  j.at("start").get_to(w.start);
  j.at("end").get_to(w.end);
  j.at("params").get_to(w.params);
}
void to_json(json& j, const OdeParams& p) { j = json{{"windows", p.windows}}; }
void from_json(const json& j, OdeParams& p) { j.at("windows").get_to(p.windows); }

void to_json(json& j, const SgdConfig& c) {
  j = json{{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"tolerance", c.tolerance}, {"seed", c.seed}};
}
void from_json(const json& j, SgdConfig& c) {
  opt(j, "learning_rate", c.learning_rate);
  opt(j, "epochs", c.epochs);
  opt(j, "tolerance", c.tolerance);
  opt(j, "seed", c.seed);
}
void to_json(json& j, const PsoConfig& c) {
  j = json{{"swarm_size", c.swarm_size}, {"inertia", c.inertia}, {"cognitive", c.cognitive},
           {"social", c.social},         {"iterations", c.iterations}, {"box_expansion", c.box_expansion},
           {"seed", c.seed}};
}
void from_json(const json& j, PsoConfig& c) {
  opt(j, "swarm_size", c.swarm_size);
  opt(j, "inertia", c.inertia);
  opt(j, "cognitive", c.cognitive);
  opt(j, "social", c.social);
  opt(j, "iterations", c.iterations);
  opt(j, "box_expansion", c.box_expansion);
  opt(j, "seed", c.seed);
}
void to_json(json& j, const FitConfig& c) {
  j = json{{"smoothing_window", c.smoothing_window}, {"curvature_order", c.curvature_order},
           {"drop_fractions", c.drop_fractions},     {"min_samples", c.min_samples},
           {"window_breaks", c.window_breaks},       {"divergence_factor", c.divergence_factor},
           {"sgd", c.sgd},                           {"use_pso", c.use_pso},
           {"pso", c.pso}};
}
void from_json(const json& j, FitConfig& c) {
  opt(j, "smoothing_window", c.smoothing_window);
  opt(j, "curvature_order", c.curvature_order);
  opt(j, "drop_fractions", c.drop_fractions);
  opt(j, "min_samples", c.min_samples);
  opt(j, "window_breaks", c.window_breaks);
  opt(j, "divergence_factor", c.divergence_factor);
  opt(j, "sgd", c.sgd);
  opt(j, "use_pso", c.use_pso);
  opt(j, "pso", c.pso);
}
void to_json(json& j, const Candidate& c) {
  j = json{{"params", c.params}, {"rmse", c.rmse}, {"drop_fraction", c.drop_fraction}};
}
void from_json(const json& j, Candidate& c) {
  j.at("params").get_to(c.params);
  c.rmse = j.at("rmse").is_null() ? std::numeric_limits<double>::infinity() : j.at("rmse").get<double>();
  j.at("drop_fraction").get_to(c.drop_fraction);
}
void to_json(json& j, const FitReport& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    json cj = c;
    if (!std::isfinite(c.rmse)) cj["rmse"] = nullptr;
    cands.push_back(cj);
  }
  j = json{{"version", kFormatVersion}, {"structure", r.structure_id}, {"params", r.params},
           {"rmse", r.rmse},            {"candidates", cands},        {"dropped_fraction", r.dropped_fraction},
           {"pso_used", r.pso_used},    {"seed", r.config.sgd.seed},  {"config", r.config}};
}
void from_json(const json& j, FitReport& r) {
  check_version(j, "ODE model");
  j.at("structure").get_to(r.structure_id);
  j.at("params").get_to(r.params);
  j.at("rmse").get_to(r.rmse);
  opt(j, "candidates", r.candidates);
  opt(j, "dropped_fraction", r.dropped_fraction);
  opt(j, "pso_used", r.pso_used);
  opt(j, "config", r.config);
  r.params.validate(structure_by_id(r.structure_id));
}

void to_json(json& j, const Histogram& h) { j = json{{"edges", h.edges}, {"counts", h.counts}}; }
void from_json(const json& j, Histogram& h) {
  j.at("edges").get_to(h.edges);
  j.at("counts").get_to(h.counts);
  if (!h.counts.empty() && h.edges.size() != h.counts.size() + 1)
    throw InvalidArgument("histogram needs one more edge than bins");
  for (std::size_t i = 1; i < h.edges.size(); ++i)
    if (!(h.edges[i] > h.edges[i - 1])) throw InvalidArgument("histogram edges must increase strictly");
}
void to_json(json& j, const ControlProfile& p) {
  auto state = [](const StateProfile& s) { return json{{"duration", s.duration}, {"level", s.level}}; };
  j = json{{"version", kFormatVersion}, {"high", state(p.high)}, {"low", state(p.low)},
           {"start_state_counts", {{"high", p.start_high}, {"low", p.start_low}}},
           {"source_count", p.source_count}, {"single_state", p.single_state}};
}
void from_json(const json& j, ControlProfile& p) {
  check_version(j, "control profile");
  j.at("high").at("duration").get_to(p.high.duration);
  j.at("high").at("level").get_to(p.high.level);
  j.at("low").at("duration").get_to(p.low.duration);
  j.at("low").at("level").get_to(p.low.level);
  j.at("start_state_counts").at("high").get_to(p.start_high);
  j.at("start_state_counts").at("low").get_to(p.start_low);
  opt(j, "source_count", p.source_count);
  opt(j, "single_state", p.single_state);
}
void to_json(json& j, const PairFeatures& f) {
  j = json{{"mean_high_duration", f.mean_high_duration}, {"mean_low_duration", f.mean_low_duration},
           {"mean_high_level", f.mean_high_level},       {"mean_low_level", f.mean_low_level}};
}
void from_json(const json& j, PairFeatures& f) {
  j.at("mean_high_duration").get_to(f.mean_high_duration);
  j.at("mean_low_duration").get_to(f.mean_low_duration);
  j.at("mean_high_level").get_to(f.mean_high_level);
  j.at("mean_low_level").get_to(f.mean_low_level);
}
void to_json(json& j, const FittedPair& f) {
  j = json{{"features", f.features}, {"params", f.params}, {"initial_value", f.initial_value},
           {"dependent_range", f.dependent_range}, {"source", f.source}};
}
void from_json(const json& j, FittedPair& f) {
  j.at("features").get_to(f.features);
  j.at("params").get_to(f.params);
  j.at("initial_value").get_to(f.initial_value);
  opt(j, "dependent_range", f.dependent_range);
  opt(j, "source", f.source);
}

void to_json(json& j, const AnomalySpec& s) {
  j = json{{"kind", to_string(s.kind)}, {"magnitude", s.magnitude}, {"count", s.count}, {"seed", s.seed},
           {"side", s.side == ExceedSide::High ? "high" : s.side == ExceedSide::Low ? "low" : "random"}};
  if (s.duration.samples > 0)
    j["duration"] = s.duration.samples;
  else
    j["duration"] = json{{"min_fraction", s.duration.min_fraction}, {"max_fraction", s.duration.max_fraction}};
}
void from_json(const json& j, AnomalySpec& s) {
  const auto kind = anomaly_kind_from_string(j.at("kind").get<std::string>());
  const auto seed = j.value("seed", std::uint64_t{0});
  s = AnomalySpec::defaults(kind, seed);
  opt(j, "magnitude", s.magnitude);
  opt(j, "count", s.count);
  if (auto it = j.find("duration"); it != j.end()) {
    if (it->is_number())
      s.duration = AnomalyDuration::fixed(it->get<std::size_t>());
    else
      s.duration = AnomalyDuration::fraction(it->at("min_fraction").get<double>(),
                                             it->at("max_fraction").get<double>());
  }
  const auto side = j.value("side", std::string("random"));
  s.side = side == "high" ? ExceedSide::High : side == "low" ? ExceedSide::Low : ExceedSide::Random;
  s.validate();
}
void to_json(json& j, const AnomalyRegion& r) {
  j = json{{"start", r.start}, {"end", r.end}, {"kind", to_string(r.kind)}};
}
void from_json(const json& j, AnomalyRegion& r) {
  j.at("start").get_to(r.start);
  j.at("end").get_to(r.end);
  r.kind = anomaly_kind_from_string(j.at("kind").get<std::string>());
}

void to_json(json& j, const Normalization& n) {
  j = json{{"channels", n.channels}, {"mean", n.mean}, {"stddev", n.stddev}};
}
void from_json(const json& j, Normalization& n) {
  j.at("channels").get_to(n.channels);
  j.at("mean").get_to(n.mean);
  j.at("stddev").get_to(n.stddev);
  if (n.mean.size() != n.channels.size() || n.stddev.size() != n.channels.size())
    throw InvalidArgument("normalization statistics do not match channel list");
}
void to_json(json& j, const TrainingConfig& c) {
  j = json{{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs}, {"patience", c.patience},
           {"clip_norm", c.clip_norm},         {"chunk_length", c.chunk_length}, {"batch_size", c.batch_size},
           {"seed", c.seed}};
}
void from_json(const json& j, TrainingConfig& c) {
  opt(j, "learning_rate", c.learning_rate);
  opt(j, "max_epochs", c.max_epochs);
  opt(j, "patience", c.patience);
  opt(j, "clip_norm", c.clip_norm);
  opt(j, "chunk_length", c.chunk_length);
  opt(j, "batch_size", c.batch_size);
  opt(j, "seed", c.seed);
}
void to_json(json& j, const PredictorConfig& c) {
  j = json{{"layer_sizes", c.layer_sizes},       {"prediction_length", c.prediction_length},
           {"input_channels", c.input_channels}, {"predicted_channels", c.predicted_channels},
           {"training", c.training},             {"normalization", c.normalization}};
}
void from_json(const json& j, PredictorConfig& c) {
  opt(j, "layer_sizes", c.layer_sizes);
  opt(j, "prediction_length", c.prediction_length);
  opt(j, "input_channels", c.input_channels);
  opt(j, "predicted_channels", c.predicted_channels);
  opt(j, "training", c.training);
  opt(j, "normalization", c.normalization);
}
void to_json(json& j, const LstmNetwork& n) {
  json layers = json::array();
  for (const auto& l : n.layers)
    layers.push_back(json{{"hidden", l.hidden()},
                          {"w_in", matrix_json(l.w_in)},
                          {"w_rec", matrix_json(l.w_rec)},
                          {"bias", vector_json(l.bias)}});
  j = json{{"version", kFormatVersion},
           {"input_size", n.input_size()},
           {"output_size", n.output_size()},
           {"layers", layers},
           {"w_out", matrix_json(n.w_out)},
           {"b_out", vector_json(n.b_out)}};
}
void from_json(const json& j, LstmNetwork& n) {
  check_version(j, "network");
  n.layers.clear();
  for (const auto& l : j.at("layers"))
    n.layers.push_back(LstmLayer{matrix_from(l.at("w_in")), matrix_from(l.at("w_rec")), vector_from(l.at("bias"))});
  n.w_out = matrix_from(j.at("w_out"));
  n.b_out = vector_from(j.at("b_out"));
  n.validate();
  if (n.input_size() != j.at("input_size").get<std::size_t>() ||
      n.output_size() != j.at("output_size").get<std::size_t>())
    throw InvalidArgument("network dimension metadata does not match weights");
}
void to_json(json& j, const GaussianScorer& s) {
  j = json{{"version", kFormatVersion},
           {"dimension", s.dimension()},
           {"mean", vector_json(s.mean())},
           {"covariance", matrix_json(s.covariance())},
           {"ridge", s.ridge()},
           {"threshold", s.threshold() ? json(*s.threshold()) : json(nullptr)}};
}
void from_json(const json& j, GaussianScorer& s) {
  check_version(j, "scorer");
  s = GaussianScorer(vector_from(j.at("mean")), matrix_from(j.at("covariance")), j.at("ridge").get<double>());
  if (s.dimension() != j.at("dimension").get<std::size_t>())
    throw InvalidArgument("scorer dimension metadata does not match its mean");
  if (j.contains("threshold") && !j.at("threshold").is_null()) s.set_threshold(j.at("threshold").get<double>());
}
void to_json(json& j, const Detector& d) {
  j = json{{"version", kFormatVersion}, {"config", d.config}, {"network", d.network}, {"scorer", d.scorer}};
}
void from_json(const json& j, Detector& d) {
  check_version(j, "detector");
  j.at("config").get_to(d.config);
  j.at("network").get_to(d.network);
  j.at("scorer").get_to(d.scorer);
  d.config.validate();
  if (d.network.input_size() != d.config.input_channels.size() ||
      d.network.output_size() != d.config.output_size() || d.scorer.dimension() != d.config.output_size())
    throw InvalidArgument("detector components disagree on dimensions");
}

void to_json(json& j, const ControlGenerator& c) {
  j = json{{"high_level_min", c.high_level_min},       {"high_level_max", c.high_level_max},
           {"low_level_min", c.low_level_min},         {"low_level_max", c.low_level_max},
           {"high_duration_min", c.high_duration_min}, {"high_duration_max", c.high_duration_max},
           {"low_duration_min", c.low_duration_min},   {"low_duration_max", c.low_duration_max}};
}
void from_json(const json& j, ControlGenerator& c) {
  opt(j, "high_level_min", c.high_level_min);
  opt(j, "high_level_max", c.high_level_max);
  opt(j, "low_level_min", c.low_level_min);
  opt(j, "low_level_max", c.low_level_max);
  opt(j, "high_duration_min", c.high_duration_min);
  opt(j, "high_duration_max", c.high_duration_max);
  opt(j, "low_duration_min", c.low_duration_min);
  opt(j, "low_duration_max", c.low_duration_max);
}
void to_json(json& j, const BenchmarkConfig& c) {
  j = json{{"true_params", c.true_params},
           {"param_jitter", c.param_jitter},
           {"control", c.control},
           {"sample_period", c.sample_period},
           {"series_length", c.series_length},
           {"large_count", c.large_count},
           {"small_count", c.small_count},
           {"validation_normal_count", c.validation_normal_count},
           {"validation_anomalous_count", c.validation_anomalous_count},
           {"test_count", c.test_count},
           {"noise", c.noise},
           {"anomaly_fraction", c.anomaly_fraction},
           {"anomalies", c.anomalies},
           {"control_channel", c.control_channel},
           {"dependent_channel", c.dependent_channel},
           {"seed", c.seed}};
}
void from_json(const json& j, BenchmarkConfig& c) {
  opt(j, "true_params", c.true_params);
  opt(j, "param_jitter", c.param_jitter);
  opt(j, "control", c.control);
  opt(j, "sample_period", c.sample_period);
  opt(j, "series_length", c.series_length);
  opt(j, "large_count", c.large_count);
  opt(j, "small_count", c.small_count);
  opt(j, "validation_normal_count", c.validation_normal_count);
  opt(j, "validation_anomalous_count", c.validation_anomalous_count);
  opt(j, "test_count", c.test_count);
  opt(j, "noise", c.noise);
  opt(j, "anomaly_fraction", c.anomaly_fraction);
  opt(j, "anomalies", c.anomalies);
  opt(j, "control_channel", c.control_channel);
  opt(j, "dependent_channel", c.dependent_channel);
  opt(j, "seed", c.seed);
}
void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"architectures", c.architectures},
           {"predictor", c.predictor},
           {"ridge", c.ridge},
           {"diagonal_covariance", c.diagonal_covariance},
           {"beta", c.beta},
           {"ode_count", c.ode_count},
           {"fit", c.fit},
           {"min_duration", c.min_duration},
           {"histogram_bins", c.histogram_bins},
           {"seed", c.seed},
           {"parallel", c.parallel}};
}
void from_json(const json& j, ExperimentConfig& c) {
  opt(j, "architectures", c.architectures);
  opt(j, "predictor", c.predictor);
  opt(j, "ridge", c.ridge);
  opt(j, "diagonal_covariance", c.diagonal_covariance);
  opt(j, "beta", c.beta);
  opt(j, "ode_count", c.ode_count);
  opt(j, "fit", c.fit);
  opt(j, "min_duration", c.min_duration);
  opt(j, "histogram_bins", c.histogram_bins);
  opt(j, "seed", c.seed);
  opt(j, "parallel", c.parallel);
}
void to_json(json& j, const MetricsRow& r) {
  j = json{{"regime", r.regime},       {"ns", r.ns},
           {"np", r.np},               {"precision", r.precision},
           {"recall", r.recall},       {"f_score", r.f_score},
           {"architecture", r.architecture}, {"threshold", r.threshold},
           {"validation_f", r.validation_f}};
}
void to_json(json& j, const MetricsReport& r) {
  j = json{{"version", kFormatVersion}, {"seed", r.seed}, {"rows", r.rows}, {"config", r.config}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace odeaug
