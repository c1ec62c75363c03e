#include "odeaug/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "odeaug/anomaly.hpp"
#include "odeaug/augment.hpp"
#include "odeaug/benchmark.hpp"
#include "odeaug/control.hpp"
#include "odeaug/digest.hpp"
#include "odeaug/error.hpp"
#include "odeaug/experiment.hpp"
#include "odeaug/lstm.hpp"
#include "odeaug/metrics.hpp"
#include "odeaug/ode.hpp"
#include "odeaug/random.hpp"
#include "odeaug/scorer.hpp"
#include "odeaug/serialize.hpp"
#include "odeaug/series.hpp"

namespace fs = std::filesystem;

namespace odeaug::cli {

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  bool force = false;
  std::string format = "text";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed (overrides the config file)");
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "Output directory")->required();
  app->add_flag("--force", c.force, "Overwrite an existing output directory");
  app->add_option("--format", c.format, "Report format on stdout")
      ->check(CLI::IsMember({"csv", "text"}));
}

bool seed_given(const CLI::App* app) { return app->count("--seed") > 0; }

/// Collects written files and their digests; refuses to reuse a non-empty
/// directory unless forced.
class OutputDir {
 public:
  OutputDir(const std::string& root, bool force) : root_(root) {
    if (fs::exists(root_)) {
      if (!fs::is_directory(root_)) throw Error("'" + root + "' exists and is not a directory");
      if (!fs::is_empty(root_)) {
        if (!force) throw Error("output directory '" + root + "' is not empty; pass --force to overwrite");
        for (const auto& e : fs::directory_iterator(root_)) fs::remove_all(e.path());
      }
    }
    fs::create_directories(root_);
  }

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + p.string() + "'");
    outputs_.push_back(json{{"file", rel}, {"sha256", sha256_hex(content)}});
  }
  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
  void write_series(const std::string& rel, const TimeSeries& s) {
    std::ostringstream ss;
    write_csv(ss, s);
    write(rel, ss.str());
  }

  void finish(json manifest) {
    manifest["outputs"] = outputs_;
    const fs::path p = root_ / "manifest.json";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path root_;
  json outputs_ = json::array();
};

json input_entries(const std::vector<std::string>& paths) {
  json a = json::array();
  for (const auto& p : paths) a.push_back(json{{"path", p}, {"sha256", sha256_file(p)}});
  return a;
}

json manifest(const std::string& command, std::uint64_t seed, const std::vector<std::string>& inputs,
              const json& config) {
  return json{{"version", kFormatVersion},
              {"command", command},
              {"seed", seed},
              {"inputs", input_entries(inputs)},
              {"config", config}};
}

std::vector<std::string> with_config(std::vector<std::string> inputs, const Common& c) {
  if (!c.config.empty()) inputs.insert(inputs.begin(), c.config);
  return inputs;
}

json config_json(const Common& c) { return c.config.empty() ? json::object() : read_json_file(c.config); }

const json& section(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end()) return *it;
  static const json empty = json::object();
  return empty;
}

std::vector<TimeSeries> read_all(const std::vector<std::string>& paths) {
  std::vector<TimeSeries> out;
  for (const auto& p : paths) out.push_back(read_csv_file(p));
  return out;
}

std::string numbered(const std::string& dir, std::size_t i, const char* ext = ".csv") {
  std::string n = std::to_string(i);
  if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
  return dir + "/" + n + ext;
}

std::optional<double> opt_threshold(const CLI::App* app, double v) {
  return app->count("--threshold") ? std::optional<double>(v) : std::nullopt;
}

std::string resolve_channel(const std::string& given, const TimeSeries& s, std::size_t fallback) {
  if (!given.empty()) return given;
  if (s.channel_count() <= fallback) throw InvalidArgument("series has too few channels");
  return s.channel_names()[fallback];
}

std::string region_mask_note(const std::vector<AnomalyRegion>& r) {
  return std::to_string(r.size()) + " region" + (r.size() == 1 ? "" : "s");
}

std::vector<AnomalyRegion> labeled_regions(const TimeSeries& s) {
  std::vector<AnomalyRegion> out;
  if (!s.labels()) return out;
  const Mask& m = *s.labels();
  for (std::size_t i = 0; i < m.size();) {
    if (!m[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < m.size() && m[j]) ++j;
    out.push_back(AnomalyRegion{i, j, AnomalyKind::Zero});
    i = j;
  }
  return out;
}

// gen-data

struct GenData {
  Common c;
};

void run_gen_data(const GenData& o, const CLI::App* app, std::ostream& out) {
  const json cfg = config_json(o.c);
  BenchmarkConfig bc = section(cfg, "benchmark").empty() ? cfg.get<BenchmarkConfig>()
                                                         : section(cfg, "benchmark").get<BenchmarkConfig>();
  if (seed_given(app)) bc.seed = o.c.seed;
  const Benchmark b = gen_benchmark(bc);

  OutputDir dir(o.c.out, o.c.force);
  json doc{{"version", kFormatVersion}, {"config", bc}};
  auto write_set = [&](const char* name, const std::vector<TimeSeries>& set) {
    json files = json::array();
    for (std::size_t i = 0; i < set.size(); ++i) {
      dir.write_series(numbered(name, i), set[i]);
      files.push_back(numbered(name, i));
    }
    doc[name] = files;
  };
  write_set("large", b.large);
  json small = json::array();
  for (std::size_t i = 0; i < b.small.size(); ++i) small.push_back(numbered("large", i));
  doc["small"] = small;
  write_set("validation_normal", b.validation_normal);
  write_set("validation_anomalous", b.validation_anomalous.series);
  write_set("test", b.test.series);
  doc["regions"] = json{{"validation_anomalous", b.validation_anomalous.regions},
                        {"test", b.test.regions}};
  dir.write_json("benchmark.json", doc);
  dir.finish(manifest("gen-data", bc.seed, with_config({}, o.c), bc));
  out << "wrote " << b.large.size() + b.validation_normal.size() + b.validation_anomalous.series.size() +
                         b.test.series.size()
      << " series to " << o.c.out << '\n';
}

// fit-ode

struct FitOde {
  Common c;
  std::string input, control, dependent, structure = "linear1", windows = "single";
  bool pso = false;
  double threshold = 0.0;
  std::size_t min_duration = 2;
};

void run_fit_ode(const FitOde& o, const CLI::App* app, std::ostream& out) {
  FitConfig fc = config_json(o.c).get<FitConfig>();
  const TimeSeries s = read_csv_file(o.input);
  const std::string control = resolve_channel(o.control, s, 0);
  const std::string dependent = resolve_channel(o.dependent, s, 1);
  if (seed_given(app)) {
    fc.sgd.seed = o.c.seed;
    fc.pso.seed = derive_seed(o.c.seed, "pso");
  }
  if (app->count("--pso")) fc.use_pso = o.pso;
  if (o.windows == "cycle") {
    const auto seg = segment_control(s, control, opt_threshold(app, o.threshold), o.min_duration);
    fc.window_breaks = cycle_window_breaks(seg);
  }
  const auto& structure = structure_by_id(o.structure);
  const auto pair = SeriesPair::from_series(s, control, dependent);
  const FitReport report = fit(pair, structure, fc);

  OutputDir dir(o.c.out, o.c.force);
  dir.write_json("model.json", report);
  const auto traj = integrate(structure, report.params, std::span<const double>(pair.control.data(), pair.length()),
                              pair.dependent[0], pair.dt);
  std::ostringstream csv;
  csv << "t," << control << ',' << dependent << ",fitted\n";
  for (std::size_t i = 0; i < pair.length(); ++i)
    csv << format_double(static_cast<double>(i) * pair.dt) << ',' << format_double(pair.control[i]) << ','
        << format_double(pair.dependent[i]) << ',' << format_double(traj[i]) << '\n';
  dir.write("reconstruction.csv", csv.str());
  json cfg{{"fit", fc}, {"control", control}, {"dependent", dependent}, {"structure", o.structure}};
  dir.finish(manifest("fit-ode", fc.sgd.seed, with_config({o.input}, o.c), cfg));

  out << "rmse " << format_double(report.rmse);
  for (double p : report.params.windows.front().params) out << ' ' << format_double(p);
  out << '\n';
  for (const auto& note : report.params.stability_notes(structure)) out << "note: " << note << '\n';
}

// synth-control

struct SynthControl {
  Common c;
  std::vector<std::string> inputs;
  std::string channel;
  double threshold = 0.0;
  std::size_t min_duration = 2, bins = 10, length = 0, count = 1;
  double sample_period = 1.0;
};

void run_synth_control(const SynthControl& o, const CLI::App* app, std::ostream& out) {
  const auto series = read_all(o.inputs);
  std::vector<StateSegmentation> segs;
  std::ostringstream seg_csv;
  seg_csv << "source,state,start,duration,level\n";
  std::string channel;
  for (std::size_t i = 0; i < series.size(); ++i) {
    channel = resolve_channel(o.channel, series[i], 0);
    segs.push_back(segment_control(series[i], channel, opt_threshold(app, o.threshold), o.min_duration));
    for (const auto& g : segs.back().segments)
      seg_csv << i << ',' << to_string(g.state) << ',' << g.start << ',' << g.duration << ','
              << format_double(g.level) << '\n';
  }
  const ControlProfile profile = build_profile(segs, o.bins);

  OutputDir dir(o.c.out, o.c.force);
  dir.write_json("profile.json", profile);
  dir.write("segments.csv", seg_csv.str());
  json samples = json::array();
  if (o.length > 0) {
    for (std::size_t k = 0; k < o.count; ++k) {
      const std::uint64_t seed = derive_seed(o.c.seed, k);
      const SampledControl sc = sample_control(profile, o.length, seed);
      dir.write_series(numbered("control", k),
                       TimeSeries({channel}, o.sample_period, Eigen::MatrixXd(sc.values)));
      samples.push_back(json{{"file", numbered("control", k)}, {"seed", seed}});
    }
  }
  json cfg{{"channel", channel},
           {"threshold", app->count("--threshold") ? json(o.threshold) : json("auto")},
           {"min_duration", o.min_duration},
           {"bins", o.bins},
           {"length", o.length},
           {"count", o.count},
           {"samples", samples}};
  dir.finish(manifest("synth-control", o.c.seed, o.inputs, cfg));
  if (profile.single_state) out << "note: no source contains both states\n";
  out << "profile from " << profile.source_count << " series\n";
}

// augment

struct Augment {
  Common c;
  std::string profile;
  std::vector<std::string> inputs, models;
  std::string control, dependent;
  std::size_t count = 1, length = 0, min_duration = 2;
  double threshold = 0.0;
};

void run_augment(const Augment& o, const CLI::App* app, std::ostream& out) {
  if (o.inputs.size() != o.models.size())
    throw InvalidArgument("--inputs and --models must list the same number of files");
  const auto series = read_all(o.inputs);
  AugmentationPlan plan;
  plan.profile = read_json_file(o.profile).get<ControlProfile>();
  plan.control_channel = resolve_channel(o.control, series.front(), 0);
  plan.dependent_channel = resolve_channel(o.dependent, series.front(), 1);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const FitReport fr = read_json_file(o.models[i]).get<FitReport>();
    if (i == 0) plan.structure_id = fr.structure_id;
    if (fr.structure_id != plan.structure_id) throw InvalidArgument("models use different ODE structures");
    const auto seg = segment_control(series[i], plan.control_channel, opt_threshold(app, o.threshold),
                                     o.min_duration);
    plan.fitted.push_back(make_fitted_pair(series[i], plan.control_channel, plan.dependent_channel,
                                           fr.params, seg, o.inputs[i]));
  }
  plan.count = o.count;
  plan.length = o.length > 0 ? o.length : series.front().length();
  plan.sample_period = series.front().sample_period();
  plan.seed = o.c.seed;
  const auto generated = generate_all(plan);

  OutputDir dir(o.c.out, o.c.force);
  json gen = json::array();
  for (std::size_t k = 0; k < generated.size(); ++k) {
    dir.write_series(numbered("generated", k), generated[k].series);
    gen.push_back(json{{"file", numbered("generated", k)},
                       {"seed", generated[k].seed},
                       {"donor", generated[k].donor},
                       {"donor_source", plan.fitted[generated[k].donor].source},
                       {"donor_model", o.models[generated[k].donor]}});
  }
  std::vector<std::string> inputs = {o.profile};
  inputs.insert(inputs.end(), o.inputs.begin(), o.inputs.end());
  inputs.insert(inputs.end(), o.models.begin(), o.models.end());
  json cfg{{"structure", plan.structure_id}, {"count", plan.count},       {"length", plan.length},
           {"control", plan.control_channel}, {"dependent", plan.dependent_channel},
           {"generated", gen}};
  dir.finish(manifest("augment", o.c.seed, inputs, cfg));
  out << "generated " << generated.size() << " series\n";
}

// inject

struct Inject {
  Common c;
  std::string input, kind, control, dependent, model, side = "random";
  std::size_t count = 1, duration = 0, min_duration = 2;
  double magnitude = 0.0, threshold = 0.0;
};

void run_inject(const Inject& o, const CLI::App* app, std::ostream& out) {
  const json cfg_file = config_json(o.c);
  AnomalySpec spec = cfg_file.empty() ? AnomalySpec::defaults(anomaly_kind_from_string(o.kind))
                                      : cfg_file.get<AnomalySpec>();
  if (!o.kind.empty()) {
    const auto k = anomaly_kind_from_string(o.kind);
    if (k != spec.kind) spec = AnomalySpec::defaults(k);
  }
  spec.seed = o.c.seed;
  if (app->count("--count")) spec.count = o.count;
  if (app->count("--duration")) spec.duration = AnomalyDuration::fixed(o.duration);
  if (app->count("--magnitude")) spec.magnitude = o.magnitude;
  if (app->count("--side"))
    spec.side = o.side == "high" ? ExceedSide::High : o.side == "low" ? ExceedSide::Low : ExceedSide::Random;
  spec.validate();

  const TimeSeries s = read_csv_file(o.input);
  const std::string control = resolve_channel(o.control, s, 0);
  const std::string dependent = resolve_channel(o.dependent, s, 1);
  const auto seg = segment_control(s, control, opt_threshold(app, o.threshold), o.min_duration);
  std::optional<InjectionModel> model;
  std::vector<std::string> inputs{o.input};
  if (!o.model.empty()) {
    const FitReport fr = read_json_file(o.model).get<FitReport>();
    model = InjectionModel{&structure_by_id(fr.structure_id), fr.params};
    inputs.push_back(o.model);
  } else if (spec.kind == AnomalyKind::WrongState) {
    throw InvalidArgument("WRONG_STATE injection needs --model");
  }
  const InjectionResult res = inject(s, dependent, seg, model, spec, labeled_regions(s));

  OutputDir dir(o.c.out, o.c.force);
  dir.write_series("labeled.csv", res.series);
  dir.write_json("injection.json", json{{"version", kFormatVersion},
                                        {"dependent", dependent},
                                        {"spec", spec},
                                        {"regions", res.report.regions}});
  dir.finish(manifest("inject", spec.seed, with_config(inputs, o.c),
                      json{{"spec", spec}, {"control", control}, {"dependent", dependent}}));
  out << "injected " << region_mask_note(res.report.regions) << '\n';
}

// train

struct Train {
  Common c;
  std::vector<std::string> train, validation, inputs, predict;
  std::vector<std::size_t> layers;
  std::size_t prediction_length = 0;
  int epochs = 0;
};

json predictor_doc(const PredictorConfig& config, const LstmNetwork& net) {
  return json{{"version", kFormatVersion}, {"config", config}, {"network", net}};
}

void run_train(const Train& o, const CLI::App* app, std::ostream& out) {
  PredictorConfig pc = config_json(o.c).get<PredictorConfig>();
  const auto train_set = read_all(o.train);
  const auto val_set = read_all(o.validation);
  if (!o.inputs.empty()) pc.input_channels = o.inputs;
  if (!o.predict.empty()) pc.predicted_channels = o.predict;
  if (!o.layers.empty()) pc.layer_sizes = o.layers;
  if (app->count("--prediction-length")) pc.prediction_length = o.prediction_length;
  if (app->count("--epochs")) pc.training.max_epochs = o.epochs;
  if (seed_given(app)) pc.training.seed = o.c.seed;
  if (pc.input_channels.empty()) pc.input_channels = train_set.front().channel_names();
  if (pc.predicted_channels.empty()) pc.predicted_channels = {train_set.front().channel_names().back()};
  pc.normalization = {};
  const TrainResult tr = train(train_set, val_set, pc);

  OutputDir dir(o.c.out, o.c.force);
  dir.write_json("predictor.json", predictor_doc(tr.config, tr.network));
  std::ostringstream log;
  log << "epoch,train_loss,validation_loss\n";
  for (const auto& e : tr.log)
    log << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.validation_loss) << '\n';
  dir.write("training_log.csv", log.str());
  std::vector<std::string> inputs = o.train;
  inputs.insert(inputs.end(), o.validation.begin(), o.validation.end());
  PredictorConfig echo = tr.config;
  echo.normalization = {};
  dir.finish(manifest("train", pc.training.seed, with_config(inputs, o.c), echo));
  out << "best epoch " << tr.best_epoch << " of " << tr.log.size() << '\n';
}

// threshold

struct Threshold {
  Common c;
  std::string predictor;
  std::vector<std::string> normal, anomalous;
  double ridge = 1e-6, beta = 1.0;
  bool diagonal = false;
};

void run_threshold(const Threshold& o, const CLI::App* app, std::ostream& out) {
  const json cfg = config_json(o.c);
  double ridge = cfg.value("ridge", o.ridge);
  double beta = cfg.value("beta", o.beta);
  bool diagonal = cfg.value("diagonal_covariance", o.diagonal);
  if (app->count("--ridge")) ridge = o.ridge;
  if (app->count("--beta")) beta = o.beta;
  if (app->count("--diagonal")) diagonal = o.diagonal;

  const json doc = read_json_file(o.predictor);
  if (doc.value("version", 0) != kFormatVersion) throw InvalidArgument("predictor document has unsupported version");
  const auto pc = doc.at("config").get<PredictorConfig>();
  auto net = doc.at("network").get<LstmNetwork>();
  ThresholdChoice choice;
  const Detector det = calibrate_detector(std::move(net), pc, read_all(o.normal), read_all(o.anomalous),
                                          ridge, diagonal, beta, &choice);

  OutputDir dir(o.c.out, o.c.force);
  dir.write_json("detector.json", det);
  std::vector<std::string> inputs{o.predictor};
  inputs.insert(inputs.end(), o.normal.begin(), o.normal.end());
  inputs.insert(inputs.end(), o.anomalous.begin(), o.anomalous.end());
  dir.finish(manifest("threshold", o.c.seed, with_config(inputs, o.c),
                      json{{"ridge", ridge}, {"beta", beta}, {"diagonal_covariance", diagonal},
                           {"threshold", choice.threshold}, {"validation_f", choice.f_score}}));
  out << "threshold " << format_double(choice.threshold) << " F " << format_double(choice.f_score) << '\n';
}

// detect

struct Detect {
  Common c;
  std::string detector, input;
};

void run_detect(const Detect& o, const CLI::App*, std::ostream& out) {
  const Detector det = read_json_file(o.detector).get<Detector>();
  if (!det.scorer.threshold()) throw InvalidArgument("detector has no threshold");
  const TimeSeries s = read_csv_file(o.input);
  const auto scores = score_series(det.network, det.config, det.scorer, s);
  const Mask flagged = detect_scores(scores, *det.scorer.threshold());

  std::ostringstream csv;
  csv << 't';
  for (const auto& n : s.channel_names()) csv << ',' << n;
  csv << ",loglik,threshold,flagged";
  if (s.labels()) csv << ",label";
  csv << '\n';
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.length(); ++i) {
    csv << format_double(static_cast<double>(i) * s.sample_period());
    for (Eigen::Index c = 0; c < s.values().cols(); ++c)
      csv << ',' << format_double(s.values()(static_cast<Eigen::Index>(i), c));
    csv << ',' << (std::isnan(scores[i]) ? std::string() : format_double(scores[i])) << ','
        << format_double(*det.scorer.threshold()) << ',' << (flagged[i] ? 1 : 0);
    if (s.labels()) csv << ',' << ((*s.labels())[i] ? 1 : 0);
    csv << '\n';
    count += flagged[i];
  }
  OutputDir dir(o.c.out, o.c.force);
  dir.write("detection.csv", csv.str());
  dir.finish(manifest("detect", o.c.seed, {o.detector, o.input},
                      json{{"threshold", *det.scorer.threshold()}}));
  out << "flagged " << count << " of " << s.length() << " steps\n";
}

// evaluate

struct Evaluate {
  Common c;
  std::string detector;
  std::vector<std::string> inputs;
  double beta = 1.0;
};

void run_evaluate(const Evaluate& o, const CLI::App*, std::ostream& out) {
  const Detector det = read_json_file(o.detector).get<Detector>();
  if (!det.scorer.threshold()) throw InvalidArgument("detector has no threshold");
  Mask predicted, actual;
  for (const auto& s : read_all(o.inputs)) {
    if (!s.labels()) throw InvalidArgument("evaluation series must carry a label column");
    const Mask m = detect(det.network, det.config, det.scorer, s);
    predicted.insert(predicted.end(), m.begin(), m.end());
    actual.insert(actual.end(), s.labels()->begin(), s.labels()->end());
  }
  const ConfusionCounts cc = confusion(predicted, actual);
  const Prf prf = prf_from_counts(cc, o.beta);

  std::ostringstream csv, text;
  csv << "precision,recall,f_score,tp,fp,fn,tn\n"
      << format_double(prf.precision) << ',' << format_double(prf.recall) << ','
      << format_double(prf.f_score) << ',' << cc.tp << ',' << cc.fp << ',' << cc.fn << ',' << cc.tn << '\n';
  text << std::fixed << std::setprecision(3) << "P " << prf.precision << "  R " << prf.recall << "  F "
       << prf.f_score << "  (tp " << cc.tp << ", fp " << cc.fp << ", fn " << cc.fn << ", tn " << cc.tn
       << ")\n";
  OutputDir dir(o.c.out, o.c.force);
  dir.write("metrics.csv", csv.str());
  dir.write("metrics.txt", text.str());
  std::vector<std::string> inputs{o.detector};
  inputs.insert(inputs.end(), o.inputs.begin(), o.inputs.end());
  dir.finish(manifest("evaluate", o.c.seed, inputs, json{{"beta", o.beta}}));
  out << (o.c.format == "csv" ? csv.str() : text.str());
}

// experiment / curve

struct Experiment {
  Common c;
  std::vector<std::string> regimes;
  std::vector<double> fractions;
};

std::pair<BenchmarkConfig, ExperimentConfig> load_experiment(const Common& c, const CLI::App* app,
                                                             const json& cfg) {
  BenchmarkConfig bc = section(cfg, "benchmark").get<BenchmarkConfig>();
  ExperimentConfig ec = section(cfg, "experiment").get<ExperimentConfig>();
  if (seed_given(app)) {
    bc.seed = c.seed;
    ec.seed = c.seed;
  }
  return {bc, ec};
}

void run_experiment_cmd(const Experiment& o, const CLI::App* app, std::ostream& out) {
  const json cfg = config_json(o.c);
  auto [bc, ec] = load_experiment(o.c, app, cfg);
  std::vector<std::string> names = o.regimes;
  if (names.empty()) names = cfg.value("regimes", std::vector<std::string>{});
  std::vector<Regime> regimes;
  for (const auto& n : names) regimes.push_back(regime_from_name(n));
  if (regimes.empty()) regimes = all_regimes();

  const Benchmark b = gen_benchmark(bc);
  const MetricsReport report = run_experiment(b, regimes, ec);
  std::ostringstream csv, text;
  write_report_csv(csv, report);
  write_report_text(text, report);

  OutputDir dir(o.c.out, o.c.force);
  dir.write("report.csv", csv.str());
  dir.write("report.txt", text.str());
  dir.write_json("report.json", report);
  json echo{{"benchmark", bc}, {"experiment", ec}};
  json rn = json::array();
  for (auto r : regimes) rn.push_back(regime_name(r));
  echo["regimes"] = rn;
  dir.finish(manifest("experiment", ec.seed, with_config({}, o.c), echo));
  out << (o.c.format == "csv" ? csv.str() : text.str());
}

void run_curve(const Experiment& o, const CLI::App* app, std::ostream& out) {
  const json cfg = config_json(o.c);
  auto [bc, ec] = load_experiment(o.c, app, cfg);
  std::vector<double> fractions = o.fractions;
  if (fractions.empty()) fractions = cfg.value("fractions", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  const Benchmark b = gen_benchmark(bc);
  const auto curve = augmentation_curve(b, fractions, ec);
  std::ostringstream csv, text;
  write_curve_csv(csv, curve);
  text << std::fixed << std::setprecision(3);
  for (const auto& p : curve) text << "q " << p.fraction << "  generated " << p.generated << "  F " << p.f_score << '\n';

  OutputDir dir(o.c.out, o.c.force);
  dir.write("curve.csv", csv.str());
  dir.finish(manifest("curve", ec.seed, with_config({}, o.c),
                      json{{"benchmark", bc}, {"experiment", ec}, {"fractions", fractions}}));
  out << (o.c.format == "csv" ? csv.str() : text.str());
}

}  // namespace

int execute(const std::vector<std::string>& args) { return execute(args, std::cout, std::cerr); }

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ODE-augmented LSTM anomaly detection", "odeaug"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenData gen;
  auto* s_gen = app.add_subcommand("gen-data", "Generate the seeded benchmark");
  add_common(s_gen, gen.c);

  FitOde fo;
  auto* s_fit = app.add_subcommand("fit-ode", "Fit ODE parameters to one control/dependent pair");
  add_common(s_fit, fo.c);
  s_fit->add_option("--input", fo.input, "Series CSV")->required()->check(CLI::ExistingFile);
  s_fit->add_option("--control", fo.control, "Control channel (default: first)");
  s_fit->add_option("--dependent", fo.dependent, "Dependent channel (default: second)");
  s_fit->add_option("--structure", fo.structure, "ODE structure id");
  s_fit->add_flag("--pso", fo.pso, "Refine with particle swarm");
  s_fit->add_option("--windows", fo.windows, "Parameter windows")->check(CLI::IsMember({"single", "cycle"}));
  s_fit->add_option("--threshold", fo.threshold, "Control threshold for cycle windows (default: auto)");
  s_fit->add_option("--min-duration", fo.min_duration, "Minimum segment length");

  SynthControl sc;
  auto* s_syn = app.add_subcommand("synth-control", "Build a control profile and sample controls");
  add_common(s_syn, sc.c);
  s_syn->add_option("--input", sc.inputs, "Series CSVs")->required()->check(CLI::ExistingFile);
  s_syn->add_option("--channel", sc.channel, "Control channel (default: first)");
  s_syn->add_option("--threshold", sc.threshold, "State threshold (default: auto)");
  s_syn->add_option("--min-duration", sc.min_duration, "Minimum segment length");
  s_syn->add_option("--bins", sc.bins, "Histogram bins");
  s_syn->add_option("--length", sc.length, "Length of sampled controls (0: none)");
  s_syn->add_option("--count", sc.count, "Number of sampled controls");
  s_syn->add_option("--sample-period", sc.sample_period, "Sample period of sampled controls");

  Augment au;
  auto* s_aug = app.add_subcommand("augment", "Generate series from fitted ODEs under sampled controls");
  add_common(s_aug, au.c);
  s_aug->add_option("--profile", au.profile, "Control profile JSON")->required()->check(CLI::ExistingFile);
  s_aug->add_option("--inputs", au.inputs, "Real series CSVs")->required()->check(CLI::ExistingFile);
  s_aug->add_option("--models", au.models, "Fitted model JSONs, one per input")->required()->check(CLI::ExistingFile);
  s_aug->add_option("--control", au.control, "Control channel (default: first)");
  s_aug->add_option("--dependent", au.dependent, "Dependent channel (default: second)");
  s_aug->add_option("--count", au.count, "Number of generated series");
  s_aug->add_option("--length", au.length, "Generated length (default: first input's)");
  s_aug->add_option("--threshold", au.threshold, "State threshold (default: auto)");
  s_aug->add_option("--min-duration", au.min_duration, "Minimum segment length");

  Inject in;
  auto* s_inj = app.add_subcommand("inject", "Inject labeled anomalies into a series");
  add_common(s_inj, in.c);
  s_inj->add_option("--input", in.input, "Series CSV")->required()->check(CLI::ExistingFile);
  s_inj->add_option("--kind", in.kind, "ZERO, OUT_OF_RANGE, WRONG_STATE, NOISE or DRIFT");
  s_inj->add_option("--control", in.control, "Control channel (default: first)");
  s_inj->add_option("--dependent", in.dependent, "Dependent channel (default: second)");
  s_inj->add_option("--model", in.model, "Fitted model JSON (WRONG_STATE)")->check(CLI::ExistingFile);
  s_inj->add_option("--count", in.count, "Number of regions");
  s_inj->add_option("--duration", in.duration, "Fixed region length in samples");
  s_inj->add_option("--magnitude", in.magnitude, "Kind-specific magnitude");
  s_inj->add_option("--side", in.side, "OUT_OF_RANGE side")->check(CLI::IsMember({"random", "high", "low"}));
  s_inj->add_option("--threshold", in.threshold, "State threshold (default: auto)");
  s_inj->add_option("--min-duration", in.min_duration, "Minimum segment length");

  Train tr;
  auto* s_tr = app.add_subcommand("train", "Train an LSTM predictor");
  add_common(s_tr, tr.c);
  s_tr->add_option("--train", tr.train, "Training CSVs")->required()->check(CLI::ExistingFile);
  s_tr->add_option("--validation", tr.validation, "Normal validation CSVs")->required()->check(CLI::ExistingFile);
  s_tr->add_option("--inputs", tr.inputs, "Input channels")->delimiter(',');
  s_tr->add_option("--predict", tr.predict, "Predicted channels")->delimiter(',');
  s_tr->add_option("--layers", tr.layers, "Hidden sizes, e.g. 32,32")->delimiter(',');
  s_tr->add_option("--prediction-length", tr.prediction_length, "Steps ahead")->check(CLI::PositiveNumber);
  s_tr->add_option("--epochs", tr.epochs, "Maximum epochs")->check(CLI::PositiveNumber);

  Threshold th;
  auto* s_th = app.add_subcommand("threshold", "Fit the error Gaussian and choose the threshold");
  add_common(s_th, th.c);
  s_th->add_option("--predictor", th.predictor, "Trained predictor JSON")->required()->check(CLI::ExistingFile);
  s_th->add_option("--normal", th.normal, "Normal validation CSVs")->required()->check(CLI::ExistingFile);
  s_th->add_option("--anomalous", th.anomalous, "Labeled validation CSVs")->required()->check(CLI::ExistingFile);
  s_th->add_option("--ridge", th.ridge, "Covariance ridge");
  s_th->add_option("--beta", th.beta, "F-score beta")->check(CLI::PositiveNumber);
  s_th->add_flag("--diagonal", th.diagonal, "Diagonal covariance");

  Detect de;
  auto* s_de = app.add_subcommand("detect", "Score a series and flag anomalies");
  add_common(s_de, de.c);
  s_de->add_option("--detector", de.detector, "Detector JSON")->required()->check(CLI::ExistingFile);
  s_de->add_option("--input", de.input, "Series CSV")->required()->check(CLI::ExistingFile);

  Evaluate ev;
  auto* s_ev = app.add_subcommand("evaluate", "Point-wise metrics of a detector on labeled series");
  add_common(s_ev, ev.c);
  s_ev->add_option("--detector", ev.detector, "Detector JSON")->required()->check(CLI::ExistingFile);
  s_ev->add_option("--input", ev.inputs, "Labeled CSVs")->required()->check(CLI::ExistingFile);
  s_ev->add_option("--beta", ev.beta, "F-score beta")->check(CLI::PositiveNumber);

  Experiment ex;
  auto* s_ex = app.add_subcommand("experiment", "Train and evaluate every regime on the benchmark");
  add_common(s_ex, ex.c);
  s_ex->add_option("--regimes", ex.regimes, "Regime names")->delimiter(',');

  Experiment cu;
  auto* s_cu = app.add_subcommand("curve", "F-score against the amount of generated data");
  add_common(s_cu, cu.c);
  s_cu->add_option("--fractions", cu.fractions, "Fractions of the generated set, starting at 0")->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (s_gen->parsed()) run_gen_data(gen, s_gen, out);
    else if (s_fit->parsed()) run_fit_ode(fo, s_fit, out);
    else if (s_syn->parsed()) run_synth_control(sc, s_syn, out);
    else if (s_aug->parsed()) run_augment(au, s_aug, out);
    else if (s_inj->parsed()) run_inject(in, s_inj, out);
    else if (s_tr->parsed()) run_train(tr, s_tr, out);
    else if (s_th->parsed()) run_threshold(th, s_th, out);
    else if (s_de->parsed()) run_detect(de, s_de, out);
    else if (s_ev->parsed()) run_evaluate(ev, s_ev, out);
    else if (s_ex->parsed()) run_experiment_cmd(ex, s_ex, out);
    else if (s_cu->parsed()) run_curve(cu, s_cu, out);
  } catch (const json::exception& e) {
    err << "error: malformed JSON document: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace odeaug::cli
