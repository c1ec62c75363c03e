#include "odeaug/ode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "odeaug/error.hpp"
#include "odeaug/random.hpp"

namespace odeaug {

const OdeStructure& linear1() {
  static const OdeStructure s{
      "linear1", 3,
      [](std::span<const double> p, double x, double u) { return p[0] * u - p[1] * x + p[2]; },
      [](std::span<const double>, double x, double u, std::span<double> g) {
        g[0] = u;
        g[1] = -x;
        g[2] = 1.0;
      }};
  return s;
}

const OdeStructure& structure_by_id(const std::string& id) {
  if (id == "linear1") return linear1();
  throw InvalidArgument("unknown ODE structure '" + id + "'");
}

double evaluate_rhs(const OdeStructure& structure, std::span<const double> params, double x_d,
                    double x_c) {
  if (params.size() != structure.param_count)
    throw InvalidArgument(structure.id + " expects " + std::to_string(structure.param_count) +
                          " parameters, got " + std::to_string(params.size()));
  return structure.rhs(params, x_d, x_c);
}

OdeParams OdeParams::single(std::vector<double> params, std::size_t length) {
  return OdeParams{{ParamWindow{0, length, std::move(params)}}};
}

const std::vector<double>& OdeParams::at(std::size_t index) const {
  if (windows.empty()) throw InvalidArgument("parameter set has no windows");
  for (const auto& w : windows)
    if (index < w.end) return w.params;
  return windows.back().params;
}

OdeParams OdeParams::retarget(std::size_t length) const {
  if (windows.empty()) throw InvalidArgument("parameter set has no windows");
  OdeParams out;
  for (const auto& w : windows) {
    if (w.start >= length) break;
    out.windows.push_back(w);
  }
  out.windows.back().end = length;
  return out;
}

std::vector<double> OdeParams::flatten() const {
  std::vector<double> flat;
  for (const auto& w : windows) flat.insert(flat.end(), w.params.begin(), w.params.end());
  return flat;
}

OdeParams OdeParams::with_flat(std::span<const double> flat) const {
  OdeParams out = *this;
  std::size_t k = 0;
  for (auto& w : out.windows)
    for (auto& p : w.params) {
      if (k >= flat.size()) throw InvalidArgument("flat parameter vector too short");
      p = flat[k++];
    }
  if (k != flat.size()) throw InvalidArgument("flat parameter vector too long");
  return out;
}

void OdeParams::validate(const OdeStructure& structure) const {
  if (windows.empty()) throw InvalidArgument("parameter set has no windows");
  std::size_t expect = 0;
  for (const auto& w : windows) {
    if (w.start != expect) throw InvalidArgument("parameter windows are not contiguous");
    if (w.end <= w.start) throw InvalidArgument("empty parameter window");
    if (w.params.size() != structure.param_count)
      throw InvalidArgument("parameter window has wrong arity for " + structure.id);
    for (double p : w.params)
      if (!std::isfinite(p)) throw InvalidArgument("non-finite parameter");
    expect = w.end;
  }
}

std::vector<std::string> OdeParams::stability_notes(const OdeStructure& structure) const {
  std::vector<std::string> notes;
  if (structure.id != "linear1") return notes;
  for (const auto& w : windows)
    if (!(w.params[1] > 0.0))
      notes.push_back("window [" + std::to_string(w.start) + "," + std::to_string(w.end) +
                      "): P1 = " + format_double(w.params[1]) + " is not positive");
  return notes;
}

std::vector<double> integrate(const OdeStructure& structure, const OdeParams& params,
                              std::span<const double> control, double x0, double dt,
                              double divergence_limit) {
  if (!(dt > 0.0)) throw InvalidArgument("integration step must be positive");
  if (control.empty()) return {};
  if (params.windows.empty()) throw InvalidArgument("parameter set has no windows");
  for (const auto& w : params.windows)
    if (w.params.size() != structure.param_count)
      throw InvalidArgument("parameter window has wrong arity for " + structure.id);
  if (params.span() < control.size())
    throw InvalidArgument("parameter windows do not cover the integration span");

  std::vector<double> x(control.size());
  x[0] = x0;
  if (!std::isfinite(x0)) throw DivergenceError(0, "non-finite initial state");
  std::size_t win = 0;
  for (std::size_t i = 0; i + 1 < control.size(); ++i) {
    while (i >= params.windows[win].end) ++win;
    const std::span<const double> p(params.windows[win].params);
    const double u = control[i];
    const double xi = x[i];
    const double k1 = structure.rhs(p, xi, u);
    const double k2 = structure.rhs(p, xi + 0.5 * dt * k1, u);
    const double k3 = structure.rhs(p, xi + 0.5 * dt * k2, u);
    const double k4 = structure.rhs(p, xi + dt * k3, u);
    const double next = xi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(next) || std::abs(next) > divergence_limit)
      throw DivergenceError(i + 1, "integration diverged at step " + std::to_string(i + 1));
    x[i + 1] = next;
  }
  return x;
}

SeriesPair SeriesPair::from_series(const TimeSeries& series, const std::string& control_channel,
                                   const std::string& dependent_channel) {
  return SeriesPair{series.channel(control_channel), series.channel(dependent_channel),
                    series.sample_period()};
}

double divergence_limit_for(const SeriesPair& pair, double factor) {
  if (pair.dependent.size() == 0) return std::numeric_limits<double>::infinity();
  const double range = pair.dependent.maxCoeff() - pair.dependent.minCoeff();
  const double scale = range > 0.0 ? range : std::abs(pair.dependent[0]) + 1.0;
  return factor * scale;
}

double integration_rmse(const OdeStructure& structure, const OdeParams& params,
                        const SeriesPair& pair, double divergence_factor) {
  const auto n = pair.length();
  if (n == 0) throw InvalidArgument("empty series pair");
  std::vector<double> traj;
  try {
    traj = integrate(structure, params, std::span<const double>(pair.control.data(), n),
                     pair.dependent[0], pair.dt, divergence_limit_for(pair, divergence_factor));
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = traj[i] - pair.dependent[static_cast<Eigen::Index>(i)];
    sse += r * r;
  }
  return std::sqrt(sse / static_cast<double>(n));
}

RegressionSet prepare_regression(const SeriesPair& pair, double drop_fraction,
                                 const FitConfig& config, std::size_t begin, std::size_t end) {
  const auto n = pair.length();
  if (pair.control.size() != pair.dependent.size())
    throw InvalidArgument("control and dependent channels are not aligned");
  if (!(drop_fraction >= 0.0 && drop_fraction <= 0.5))
    throw InvalidArgument("drop fraction must lie in [0, 0.5]");
  if (n < config.min_samples)
    throw InvalidArgument("series has " + std::to_string(n) + " samples; at least " +
                          std::to_string(config.min_samples) + " are required");
  if (begin >= end || end > n) throw InvalidArgument("invalid regression range");

  const Eigen::VectorXd smoothed = moving_average(pair.dependent, config.smoothing_window);
  const Eigen::VectorXd slope = derivative(smoothed, pair.dt, 1);
  const Eigen::VectorXd score = curvature(smoothed, pair.dt, config.curvature_order);

  std::vector<std::size_t> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[static_cast<Eigen::Index>(a)] > score[static_cast<Eigen::Index>(b)];
  });
  const auto dropped =
      static_cast<std::size_t>(std::floor(drop_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(dropped), order.end());
  std::sort(kept.begin(), kept.end());
  if (kept.size() < config.min_samples)
    throw InvalidArgument("only " + std::to_string(kept.size()) +
                          " samples remain after dropping; at least " +
                          std::to_string(config.min_samples) + " are required");

  RegressionSet rows;
  rows.retained = kept;
  const auto m = static_cast<Eigen::Index>(kept.size());
  rows.control.resize(m);
  rows.state.resize(m);
  rows.target.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(r)]);
    rows.control[r] = pair.control[i];
    rows.state[r] = smoothed[i];
    rows.target[r] = slope[i];
  }
  return rows;
}

RegressionSet prepare_regression(const SeriesPair& pair, double drop_fraction,
                                 const FitConfig& config) {
  return prepare_regression(pair, drop_fraction, config, 0, pair.length());
}

namespace {

struct Snapshot {
  Eigen::MatrixXd jac;  // rows x k, df/dP per row
  Eigen::VectorXd residual;
  Eigen::VectorXd mean_grad;
  Eigen::MatrixXd precond;
  double loss = 0.0;
};

Snapshot take_snapshot(const OdeStructure& s, const RegressionSet& rows,
                       const std::vector<double>& p, bool check_rank) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(s.param_count);
  Snapshot snap;
  snap.jac.resize(n, k);
  snap.residual.resize(n);
  std::vector<double> g(s.param_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.param_gradient(p, rows.state[i], rows.control[i], g);
    for (Eigen::Index j = 0; j < k; ++j) snap.jac(i, j) = g[static_cast<std::size_t>(j)];
    snap.residual[i] = s.rhs(p, rows.state[i], rows.control[i]) - rows.target[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  snap.loss = snap.residual.squaredNorm() * inv_n;
  snap.mean_grad = snap.jac.transpose() * snap.residual * inv_n;
  Eigen::MatrixXd gram = snap.jac.transpose() * snap.jac * inv_n;

  if (check_rank) {
    const Eigen::VectorXd diag = gram.diagonal();
    if ((diag.array() <= 0.0).any())
      throw UnidentifiableError("regression design has an all-zero parameter direction");
    const Eigen::VectorXd d = diag.array().rsqrt();
    const Eigen::MatrixXd corr = d.asDiagonal() * gram * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-10)
      throw UnidentifiableError("regression design is rank-deficient; parameters are unidentifiable");
  }
  const double ridge = 1e-12 * gram.trace() / static_cast<double>(k);
  gram.diagonal().array() += ridge;
  snap.precond = gram.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  return snap;
}

}  // namespace

std::vector<double> sgd_regression(const OdeStructure& structure, const RegressionSet& rows,
                                   const SgdConfig& config) {
  if (rows.size() < 2) throw InvalidArgument("too few regression rows");
  const auto k = static_cast<Eigen::Index>(structure.param_count);
  std::vector<double> p(structure.param_count, 0.0);
  Rng rng(config.seed);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> g(structure.param_count);

  Snapshot snap = take_snapshot(structure, rows, p, true);
  double prev_loss = snap.loss;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    Eigen::Map<Eigen::VectorXd> pv(p.data(), k);
    for (std::size_t idx : order) {
      const auto i = static_cast<Eigen::Index>(idx);
      structure.param_gradient(p, rows.state[i], rows.control[i], g);
      const double r = structure.rhs(p, rows.state[i], rows.control[i]) - rows.target[i];
      const Eigen::Map<const Eigen::VectorXd> gi(g.data(), k);
      const Eigen::VectorXd step =
          r * gi - snap.residual[i] * snap.jac.row(i).transpose() + snap.mean_grad;
      pv -= config.learning_rate * (snap.precond * step);
    }
    for (double v : p)
      if (!std::isfinite(v)) throw UnidentifiableError("stochastic gradient descent diverged");
    snap = take_snapshot(structure, rows, p, false);
    const double improvement = prev_loss - snap.loss;
    prev_loss = snap.loss;
    if (improvement >= 0.0 && improvement < config.tolerance) break;
  }
  return p;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> window_ranges(std::size_t n,
                                                               const std::vector<std::size_t>& breaks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t b : breaks) {
    if (b <= start || b >= n) continue;
    out.emplace_back(start, b);
    start = b;
  }
  out.emplace_back(start, n);
  return out;
}

}  // namespace

std::vector<Candidate> fit_gradient_sgd(const SeriesPair& pair, const OdeStructure& structure,
                                        const std::vector<double>& drop_fractions,
                                        const FitConfig& config) {
  if (drop_fractions.empty()) throw InvalidArgument("at least one drop fraction is required");
  const auto n = pair.length();
  const auto ranges = window_ranges(n, config.window_breaks);
  std::vector<Candidate> out;
  for (std::size_t qi = 0; qi < drop_fractions.size(); ++qi) {
    const double q = drop_fractions[qi];
    SgdConfig sgd = config.sgd;
    sgd.seed = derive_seed(config.sgd.seed, qi);
    const auto global = sgd_regression(structure, prepare_regression(pair, q, config), sgd);
    OdeParams params;
    if (ranges.size() == 1) {
      params = OdeParams::single(global, n);
    } else {
      for (std::size_t w = 0; w < ranges.size(); ++w) {
        auto [b, e] = ranges[w];
        std::vector<double> local = global;
        try {
          SgdConfig ws = sgd;
          ws.seed = derive_seed(sgd.seed, w + 1);
          local = sgd_regression(structure, prepare_regression(pair, q, config, b, e), ws);
        } catch (const InvalidArgument&) {
        } catch (const UnidentifiableError&) {
        }
        params.windows.push_back(ParamWindow{b, e, std::move(local)});
      }
    }
    const double rmse = integration_rmse(structure, params, pair, config.divergence_factor);
    out.push_back(Candidate{std::move(params), rmse, q});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.rmse < b.rmse; });
  return out;
}

Candidate refine_pso(const std::vector<Candidate>& candidates, const SeriesPair& pair,
                     const OdeStructure& structure, const PsoConfig& config,
                     double divergence_factor) {
  if (candidates.empty()) throw InvalidArgument("particle swarm needs at least one candidate");
  const OdeParams& layout = candidates.front().params;
  const std::size_t dim = layout.flatten().size();
  for (const auto& c : candidates)
    if (c.params.flatten().size() != dim)
      throw InvalidArgument("candidates disagree on parameter layout");

  auto evaluate = [&](const std::vector<double>& x) {
    return integration_rmse(structure, layout.with_flat(x), pair, divergence_factor);
  };

  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (const auto& c : candidates) {
    const auto f = c.params.flatten();
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], f[j]);
      hi[j] = std::max(hi[j], f[j]);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double floor = 0.1 * std::max(std::abs(lo[j]), std::abs(hi[j])) + 1e-3;
    const double range = std::max(hi[j] - lo[j], floor);
    lo[j] -= config.box_expansion * range;
    hi[j] += config.box_expansion * range;
  }

  Rng rng(config.seed);
  const std::size_t count = std::max(config.swarm_size, candidates.size());
  std::vector<std::vector<double>> pos(count), vel(count, std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> best_pos(count);
  std::vector<double> best_val(count, std::numeric_limits<double>::infinity());
  std::vector<double> gbest = candidates.front().params.flatten();
  double gbest_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    if (i < candidates.size()) {
      pos[i] = candidates[i].params.flatten();
      best_val[i] = evaluate(pos[i]);
      if (best_val[i] < gbest_val) {
        gbest_val = best_val[i];
        gbest = pos[i];
      }
    } else {
      pos[i].resize(dim);
      for (std::size_t j = 0; j < dim; ++j) pos[i][j] = rng.uniform(lo[j], hi[j]);
    }
    best_pos[i] = pos[i];
  }

  for (int it = 0; it < config.iterations; ++it) {
    for (std::size_t i = 0; i < count; ++i) {
      const double v = evaluate(pos[i]);
      if (v < best_val[i]) {
        best_val[i] = v;
        best_pos[i] = pos[i];
      }
      if (v < gbest_val) {
        gbest_val = v;
        gbest = pos[i];
      }
    }
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double& v = vel[i][j];
        v = config.inertia * v + config.cognitive * r1 * (best_pos[i][j] - pos[i][j]) +
            config.social * r2 * (gbest[j] - pos[i][j]);
        pos[i][j] += v;
        if (pos[i][j] < lo[j] || pos[i][j] > hi[j]) {
          pos[i][j] = std::clamp(pos[i][j], lo[j], hi[j]);
          v = 0.0;
        }
      }
  }

  if (!std::isfinite(gbest_val))
    throw RefinementFailed(candidates.front().params.flatten(),
                           "every particle evaluation diverged");
  return Candidate{layout.with_flat(gbest), gbest_val, candidates.front().drop_fraction};
}

FitReport fit(const SeriesPair& pair, const OdeStructure& structure, const FitConfig& config) {
  FitReport report;
  report.structure_id = structure.id;
  report.config = config;
  report.candidates = fit_gradient_sgd(pair, structure, config.drop_fractions, config);
  Candidate best = report.candidates.front();
  if (config.use_pso) {
    best = refine_pso(report.candidates, pair, structure, config.pso, config.divergence_factor);
    report.pso_used = true;
  }
  if (!std::isfinite(best.rmse))
    throw DivergenceError(0, "every fitted candidate diverges under integration");
  report.params = best.params;
  report.dropped_fraction = best.drop_fraction;
  report.rmse = integration_rmse(structure, report.params, pair, config.divergence_factor);
  return report;
}

}  // namespace odeaug
