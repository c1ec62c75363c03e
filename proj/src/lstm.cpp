#include "odeaug/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "odeaug/error.hpp"

namespace odeaug {

Normalization Normalization::fit(const std::vector<TimeSeries>& series,
                                 const std::vector<std::string>& channels) {
  if (series.empty()) throw InvalidArgument("cannot fit normalization on no series");
  Normalization n;
  n.channels = channels;
  for (const auto& c : channels) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& s : series) {
      const Eigen::VectorXd v = s.channel(c);
      sum += v.sum();
      count += static_cast<std::size_t>(v.size());
    }
    const double mean = sum / static_cast<double>(count);
    for (const auto& s : series) sq += (s.channel(c).array() - mean).square().sum();
    double sd = std::sqrt(sq / static_cast<double>(count));
    if (!(sd > 1e-12)) sd = 1.0;
    n.mean.push_back(mean);
    n.stddev.push_back(sd);
  }
  return n;
}

std::size_t Normalization::index(const std::string& channel) const {
  auto it = std::find(channels.begin(), channels.end(), channel);
  if (it == channels.end()) throw InvalidArgument("no normalization for channel '" + channel + "'");
  return static_cast<std::size_t>(it - channels.begin());
}

double Normalization::normalize(const std::string& channel, double v) const {
  const auto i = index(channel);
  return (v - mean[i]) / stddev[i];
}

double Normalization::denormalize(const std::string& channel, double v) const {
  const auto i = index(channel);
  return v * stddev[i] + mean[i];
}

void PredictorConfig::validate() const {
  if (layer_sizes.empty()) throw InvalidArgument("at least one LSTM layer is required");
  for (auto h : layer_sizes)
    if (h == 0) throw InvalidArgument("LSTM layers need at least one unit");
  if (prediction_length < 1) throw InvalidArgument("prediction length must be at least 1");
  if (input_channels.empty()) throw InvalidArgument("no input channels configured");
  if (predicted_channels.empty()) throw InvalidArgument("no predicted channels configured");
  if (training.chunk_length < 1 || training.batch_size < 1)
    throw InvalidArgument("chunk length and batch size must be positive");
}

LstmNetwork LstmNetwork::zeros(std::size_t input_size, const std::vector<std::size_t>& layer_sizes,
                               std::size_t output_size) {
  LstmNetwork net;
  auto in = static_cast<Eigen::Index>(input_size);
  for (auto h : layer_sizes) {
    const auto H = static_cast<Eigen::Index>(h);
    net.layers.push_back(LstmLayer{Eigen::MatrixXd::Zero(4 * H, in), Eigen::MatrixXd::Zero(4 * H, H),
                                   Eigen::VectorXd::Zero(4 * H)});
    in = H;
  }
  net.w_out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(output_size), in);
  net.b_out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(output_size));
  return net;
}

LstmNetwork LstmNetwork::initialize(std::size_t input_size,
                                    const std::vector<std::size_t>& layer_sizes,
                                    std::size_t output_size, Rng& rng) {
  LstmNetwork net = zeros(input_size, layer_sizes, output_size);
  auto fill = [&](Eigen::MatrixXd& m, double scale) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
  };
  for (auto& l : net.layers) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.hidden()));
    fill(l.w_in, scale);
    fill(l.w_rec, scale);
    const auto H = static_cast<Eigen::Index>(l.hidden());
    l.bias.segment(H, H).setOnes();
  }
  fill(net.w_out, 1.0 / std::sqrt(static_cast<double>(net.w_out.cols())));
  return net;
}

std::size_t LstmNetwork::input_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().w_in.cols());
}

std::size_t LstmNetwork::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(w_out.size() + b_out.size());
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w_in.size() + l.w_rec.size() + l.bias.size());
  return n;
}

Eigen::VectorXd LstmNetwork::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  auto put = [&](const auto& m) {
    flat.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  for (const auto& l : layers) {
    put(l.w_in);
    put(l.w_rec);
    put(l.bias);
  }
  put(w_out);
  put(b_out);
  return flat;
}

void LstmNetwork::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count()))
    throw InvalidArgument("flat parameter vector has the wrong size");
  Eigen::Index k = 0;
  auto get = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(k, m.size());
    k += m.size();
  };
  for (auto& l : layers) {
    get(l.w_in);
    get(l.w_rec);
    get(l.bias);
  }
  get(w_out);
  get(b_out);
}

bool LstmNetwork::all_finite() const {
  for (const auto& l : layers)
    if (!l.w_in.allFinite() || !l.w_rec.allFinite() || !l.bias.allFinite()) return false;
  return w_out.allFinite() && b_out.allFinite();
}

void LstmNetwork::validate() const {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  Eigen::Index in = layers.front().w_in.cols();
  for (const auto& l : layers) {
    const Eigen::Index H = l.w_rec.cols();
    if (H < 1 || l.w_rec.rows() != 4 * H || l.w_in.rows() != 4 * H || l.w_in.cols() != in ||
        l.bias.size() != 4 * H)
      throw InvalidArgument("inconsistent LSTM layer dimensions");
    in = H;
  }
  if (w_out.cols() != in || b_out.size() != w_out.rows())
    throw InvalidArgument("inconsistent output layer dimensions");
  if (!all_finite()) throw InvalidArgument("network contains non-finite weights");
}

namespace {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

struct LayerTrace {
  // Per step: gate activations (4H x B), cell state, tanh(cell), hidden.
  std::vector<Eigen::ArrayXXd> gates;
  std::vector<Eigen::MatrixXd> cell;
  std::vector<Eigen::ArrayXXd> cell_tanh;
  std::vector<Eigen::MatrixXd> hidden;
};

void forward_layer(const LstmLayer& layer, const std::vector<Eigen::MatrixXd>& inputs,
                   LayerTrace& trace) {
  const auto H = static_cast<Eigen::Index>(layer.hidden());
  const auto T = inputs.size();
  const Eigen::Index B = inputs.front().cols();
  trace.gates.resize(T);
  trace.cell.resize(T);
  trace.cell_tanh.resize(T);
  trace.hidden.resize(T);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd z = layer.w_in * inputs[t] + layer.w_rec * h;
    z.colwise() += layer.bias;
    Eigen::ArrayXXd a(4 * H, B);
    a.topRows(2 * H) = sigmoid(z.topRows(2 * H).array());
    a.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh();
    a.bottomRows(H) = sigmoid(z.bottomRows(H).array());
    c = (a.middleRows(H, H) * c.array() + a.topRows(H) * a.middleRows(2 * H, H)).matrix();
    Eigen::ArrayXXd ct = c.array().tanh();
    h = (a.bottomRows(H) * ct).matrix();
    trace.gates[t] = std::move(a);
    trace.cell[t] = c;
    trace.cell_tanh[t] = std::move(ct);
    trace.hidden[t] = h;
  }
}

/// Backpropagates hidden-state gradients through one layer; returns the
/// gradients with respect to its inputs.
std::vector<Eigen::MatrixXd> backward_layer(const LstmLayer& layer,
                                            const std::vector<Eigen::MatrixXd>& inputs,
                                            const LayerTrace& trace,
                                            const std::vector<Eigen::MatrixXd>& dh_ext,
                                            LstmLayer& grad) {
  const auto H = static_cast<Eigen::Index>(layer.hidden());
  const auto T = inputs.size();
  const Eigen::Index B = inputs.front().cols();
  std::vector<Eigen::MatrixXd> dx(T);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::ArrayXXd dc_next = Eigen::ArrayXXd::Zero(H, B);
  const Eigen::MatrixXd zero_state = Eigen::MatrixXd::Zero(H, B);
  Eigen::ArrayXXd dz(4 * H, B);
  for (std::size_t t = T; t-- > 0;) {
    const auto& a = trace.gates[t];
    const auto i = a.topRows(H);
    const auto f = a.middleRows(H, H);
    const auto g = a.middleRows(2 * H, H);
    const auto o = a.bottomRows(H);
    const Eigen::MatrixXd& c_prev = t > 0 ? trace.cell[t - 1] : zero_state;
    const Eigen::MatrixXd& h_prev = t > 0 ? trace.hidden[t - 1] : zero_state;
    const Eigen::ArrayXXd dh = (dh_ext[t] + dh_next).array();
    const auto& ct = trace.cell_tanh[t];
    const Eigen::ArrayXXd dc = dc_next + dh * o * (1.0 - ct.square());
    dz.topRows(H) = dc * g * i * (1.0 - i);
    dz.middleRows(H, H) = dc * c_prev.array() * f * (1.0 - f);
    dz.middleRows(2 * H, H) = dc * i * (1.0 - g.square());
    dz.bottomRows(H) = dh * ct * o * (1.0 - o);
    dc_next = dc * f;
    const auto dzm = dz.matrix();
    grad.w_in.noalias() += dzm * inputs[t].transpose();
    grad.w_rec.noalias() += dzm * h_prev.transpose();
    grad.bias += dzm.rowwise().sum();
    dx[t].noalias() = layer.w_in.transpose() * dzm;
    dh_next.noalias() = layer.w_rec.transpose() * dzm;
  }
  return dx;
}

}  // namespace

double sequence_loss(const LstmNetwork& net, const SequenceBatch& batch, LstmNetwork* grad) {
  const auto T = batch.inputs.size();
  if (T == 0) return 0.0;
  std::vector<LayerTrace> traces(net.layers.size());
  const std::vector<Eigen::MatrixXd>* in = &batch.inputs;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    forward_layer(net.layers[l], *in, traces[l]);
    in = &traces[l].hidden;
  }
  double total_weight = 0.0;
  for (const auto& w : batch.weights) total_weight += w.sum();
  if (total_weight <= 0.0) {
    if (grad) {
      *grad = net;
      grad->assign(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count())));
    }
    return 0.0;
  }

  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dy(T);
  const auto& top = traces.back().hidden;
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::MatrixXd y = net.w_out * top[t];
    y.colwise() += net.b_out;
    const Eigen::ArrayXXd r = (y - batch.targets[t]).array() * batch.weights[t].array();
    loss += (r * (y - batch.targets[t]).array()).sum();
    dy[t] = (2.0 / total_weight) * r.matrix();
  }
  loss /= total_weight;
  if (!grad) return loss;

  *grad = net;
  grad->assign(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  std::vector<Eigen::MatrixXd> dh(T);
  for (std::size_t t = 0; t < T; ++t) {
    grad->w_out.noalias() += dy[t] * top[t].transpose();
    grad->b_out += dy[t].rowwise().sum();
    dh[t].noalias() = net.w_out.transpose() * dy[t];
  }
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& inputs = l == 0 ? batch.inputs : traces[l - 1].hidden;
    dh = backward_layer(net.layers[l], inputs, traces[l], dh, grad->layers[l]);
  }
  return loss;
}

Eigen::MatrixXd normalized_inputs(const PredictorConfig& config, const TimeSeries& series) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(series.length()),
                    static_cast<Eigen::Index>(config.input_channels.size()));
  for (std::size_t c = 0; c < config.input_channels.size(); ++c) {
    const auto& name = config.input_channels[c];
    const auto k = config.normalization.index(name);
    x.col(static_cast<Eigen::Index>(c)) =
        (series.channel(name).array() - config.normalization.mean[k]) / config.normalization.stddev[k];
  }
  return x;
}

Eigen::MatrixXd normalized_targets(const PredictorConfig& config, const TimeSeries& series) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(series.length()),
                    static_cast<Eigen::Index>(config.predicted_channels.size()));
  for (std::size_t c = 0; c < config.predicted_channels.size(); ++c) {
    const auto& name = config.predicted_channels[c];
    const auto k = config.normalization.index(name);
    x.col(static_cast<Eigen::Index>(c)) =
        (series.channel(name).array() - config.normalization.mean[k]) / config.normalization.stddev[k];
  }
  return x;
}

Eigen::MatrixXd predict(const LstmNetwork& net, const PredictorConfig& config,
                        const TimeSeries& series) {
  for (const auto& c : config.input_channels)
    if (!series.has_channel(c)) throw InvalidArgument("series lacks input channel '" + c + "'");
  if (series.length() < 2) throw InvalidArgument("prediction needs at least two samples");
  if (net.input_size() != config.input_channels.size() || net.output_size() != config.output_size())
    throw InvalidArgument("network dimensions do not match the predictor configuration");
  const Eigen::MatrixXd x = normalized_inputs(config, series);
  const auto n = x.rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(net.output_size()));
  std::vector<Eigen::VectorXd> h, c;
  for (const auto& l : net.layers) {
    h.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.hidden())));
    c.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.hidden())));
  }
  Eigen::VectorXd in;
  for (Eigen::Index t = 0; t < n; ++t) {
    in = x.row(t).transpose();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      const auto H = static_cast<Eigen::Index>(layer.hidden());
      const Eigen::VectorXd z = layer.w_in * in + layer.w_rec * h[l] + layer.bias;
      const Eigen::ArrayXd i = 1.0 / (1.0 + (-z.segment(0, H).array()).exp());
      const Eigen::ArrayXd f = 1.0 / (1.0 + (-z.segment(H, H).array()).exp());
      const Eigen::ArrayXd g = z.segment(2 * H, H).array().tanh();
      const Eigen::ArrayXd o = 1.0 / (1.0 + (-z.segment(3 * H, H).array()).exp());
      c[l] = (f * c[l].array() + i * g).matrix();
      h[l] = (o * c[l].array().tanh()).matrix();
      in = h[l];
    }
    out.row(t) = (net.w_out * in + net.b_out).transpose();
  }
  return out;
}

namespace {

struct Chunk {
  std::size_t series;
  std::size_t start;
};

struct Prepared {
  std::vector<Eigen::MatrixXd> inputs;   // n x I
  std::vector<Eigen::MatrixXd> targets;  // n x O
  std::vector<Eigen::MatrixXd> weights;  // n x O
};

Prepared prepare(const PredictorConfig& config, const std::vector<TimeSeries>& series) {
  Prepared p;
  const auto l = static_cast<Eigen::Index>(config.prediction_length);
  const auto d = static_cast<Eigen::Index>(config.predicted_channels.size());
  for (const auto& s : series) {
    const Eigen::MatrixXd y = normalized_targets(config, s);
    const auto n = y.rows();
    Eigen::MatrixXd tgt = Eigen::MatrixXd::Zero(n, l * d);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, l * d);
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index i = 1; i <= l && t + i < n; ++i) {
          tgt(t, c * l + i - 1) = y(t + i, c);
          w(t, c * l + i - 1) = 1.0;
        }
    p.inputs.push_back(normalized_inputs(config, s));
    p.targets.push_back(std::move(tgt));
    p.weights.push_back(std::move(w));
  }
  return p;
}

SequenceBatch make_batch(const Prepared& p, const std::vector<Chunk>& chunks, std::size_t first,
                         std::size_t count, std::size_t T) {
  SequenceBatch b;
  const auto B = static_cast<Eigen::Index>(count);
  const Eigen::Index I = p.inputs.front().cols();
  const Eigen::Index O = p.targets.front().cols();
  for (std::size_t t = 0; t < T; ++t) {
    b.inputs.push_back(Eigen::MatrixXd::Zero(I, B));
    b.targets.push_back(Eigen::MatrixXd::Zero(O, B));
    b.weights.push_back(Eigen::MatrixXd::Zero(O, B));
  }
  for (std::size_t j = 0; j < count; ++j) {
    const auto& ch = chunks[first + j];
    const auto n = static_cast<std::size_t>(p.inputs[ch.series].rows());
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t t = 0; t < T && ch.start + t < n; ++t) {
      const auto r = static_cast<Eigen::Index>(ch.start + t);
      b.inputs[t].col(col) = p.inputs[ch.series].row(r).transpose();
      b.targets[t].col(col) = p.targets[ch.series].row(r).transpose();
      b.weights[t].col(col) = p.weights[ch.series].row(r).transpose();
    }
  }
  return b;
}

}  // namespace

double evaluation_loss(const LstmNetwork& net, const PredictorConfig& config,
                       const std::vector<TimeSeries>& series) {
  double sse = 0.0;
  double count = 0.0;
  const auto l = static_cast<Eigen::Index>(config.prediction_length);
  const auto d = static_cast<Eigen::Index>(config.predicted_channels.size());
  for (const auto& s : series) {
    const Eigen::MatrixXd pred = predict(net, config, s);
    const Eigen::MatrixXd y = normalized_targets(config, s);
    const auto n = y.rows();
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index i = 1; i <= l && t + i < n; ++i) {
          const double r = pred(t, c * l + i - 1) - y(t + i, c);
          sse += r * r;
          count += 1.0;
        }
  }
  return count > 0.0 ? sse / count : 0.0;
}

TrainResult train(const std::vector<TimeSeries>& train, const std::vector<TimeSeries>& validation,
                  const PredictorConfig& config_in) {
  config_in.validate();
  if (train.empty()) throw InvalidArgument("training set is empty");
  for (const auto& s : train) {
    if (s.length() <= config_in.prediction_length + 1)
      throw InvalidArgument("training series shorter than prediction length + 2");
    if (s.labels()) {
      for (bool b : *s.labels())
        if (b) throw InvalidArgument("training data must be normal (unlabeled or all-false labels)");
    }
  }

  TrainResult result;
  result.config = config_in;
  PredictorConfig& config = result.config;
  if (config.normalization.empty()) {
    std::set<std::string> seen;
    std::vector<std::string> channels;
    for (const auto& c : config.input_channels)
      if (seen.insert(c).second) channels.push_back(c);
    for (const auto& c : config.predicted_channels)
      if (seen.insert(c).second) channels.push_back(c);
    config.normalization = Normalization::fit(train, channels);
  }

  const auto& tc = config.training;
  Rng rng(tc.seed);
  LstmNetwork net = LstmNetwork::initialize(config.input_channels.size(), config.layer_sizes,
                                            config.output_size(), rng);
  const Prepared data = prepare(config, train);

  std::vector<Chunk> chunks;
  for (std::size_t s = 0; s < train.size(); ++s)
    for (std::size_t start = 0; start + 1 < train[s].length(); start += tc.chunk_length)
      chunks.push_back(Chunk{s, start});

  Eigen::VectorXd theta = net.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  const auto& monitor = validation.empty() ? train : validation;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = theta;
  int since_best = 0;
  LstmNetwork grad;
  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(chunks.begin(), chunks.end());
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < chunks.size(); first += tc.batch_size) {
      const auto count = std::min(tc.batch_size, chunks.size() - first);
      const SequenceBatch batch = make_batch(data, chunks, first, count, tc.chunk_length);
      const double loss = sequence_loss(net, batch, &grad);
      if (!std::isfinite(loss))
        throw TrainingDiverged(static_cast<std::size_t>(epoch),
                               "non-finite training loss in epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;
      Eigen::VectorXd g = grad.flatten();
      const double norm = g.norm();
      if (norm > tc.clip_norm) g *= tc.clip_norm / norm;
      ++step;
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      theta.array() -= tc.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      net.assign(theta);
    }
    const double val = evaluation_loss(net, config, monitor);
    if (!std::isfinite(val))
      throw TrainingDiverged(static_cast<std::size_t>(epoch),
                             "non-finite validation loss in epoch " + std::to_string(epoch));
    result.log.push_back(EpochLog{epoch, epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1)), val});
    if (val < best) {
      best = val;
      best_theta = theta;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (tc.patience > 0 && ++since_best >= tc.patience) {
      break;
    }
  }
  net.assign(best_theta);
  result.network = std::move(net);
  return result;
}

}  // namespace odeaug
