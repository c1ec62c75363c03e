#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "odeaug/series.hpp"

namespace odeaug {

/// Right-hand side dx/dt = f(P, x, u) of a scalar ODE driven by one control
/// input, together with its gradient with respect to the parameters.
struct OdeStructure {
  using Rhs = std::function<double(std::span<const double> params, double x, double u)>;
  using ParamGradient =
      std::function<void(std::span<const double> params, double x, double u, std::span<double> out)>;

  std::string id;
  std::size_t param_count = 0;
  Rhs rhs;
  ParamGradient param_gradient;
};

/// f = P0*u - P1*x + P2
const OdeStructure& linear1();

/// Looks up a built-in structure; throws InvalidArgument for unknown ids.
const OdeStructure& structure_by_id(const std::string& id);

double evaluate_rhs(const OdeStructure& structure, std::span<const double> params, double x_d,
                    double x_c);

/// Parameters valid on the half-open sample range [start, end).
struct ParamWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<double> params;

  bool operator==(const ParamWindow&) const = default;
};

struct OdeParams {
  std::vector<ParamWindow> windows;

  static OdeParams single(std::vector<double> params, std::size_t length);

  /// Parameters of the window containing sample `index`. Indices past the
  /// last window use the last window.
  const std::vector<double>& at(std::size_t index) const;
  std::size_t span() const { return windows.empty() ? 0 : windows.back().end; }

  /// Same windows clipped or extended so they cover exactly [0, length).
  OdeParams retarget(std::size_t length) const;

  std::vector<double> flatten() const;
  OdeParams with_flat(std::span<const double> flat) const;

  /// Throws InvalidArgument unless windows are contiguous from 0, non-empty,
  /// finite and of the structure's arity.
  void validate(const OdeStructure& structure) const;

  /// Human-readable notes for windows whose linear1 decay rate P1 is not
  /// positive (trajectory is then not pulled toward an equilibrium).
  std::vector<std::string> stability_notes(const OdeStructure& structure) const;

  bool operator==(const OdeParams&) const = default;
};

/// Fixed-step classical RK4 with the control held constant over each
/// sample interval. Returns one state per control sample, starting at x0.
/// Throws DivergenceError when the state becomes non-finite or |x| exceeds
/// `divergence_limit`.
std::vector<double> integrate(const OdeStructure& structure, const OdeParams& params,
                              std::span<const double> control, double x0, double dt,
                              double divergence_limit = std::numeric_limits<double>::infinity());

/// Aligned (control, dependent) channels of one series.
struct SeriesPair {
  Eigen::VectorXd control;
  Eigen::VectorXd dependent;
  double dt = 1.0;

  static SeriesPair from_series(const TimeSeries& series, const std::string& control_channel,
                                const std::string& dependent_channel);
  std::size_t length() const { return static_cast<std::size_t>(control.size()); }
};

/// Divergence guard used for a pair: 1e6 times the dependent range.
double divergence_limit_for(const SeriesPair& pair, double factor = 1e6);

/// RMSE between the observed dependent channel and the trajectory integrated
/// from its first sample. Returns +inf when integration diverges.
double integration_rmse(const OdeStructure& structure, const OdeParams& params,
                        const SeriesPair& pair, double divergence_factor = 1e6);

struct SgdConfig {
  double learning_rate = 1e-2;
  int epochs = 200;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
};

struct PsoConfig {
  std::size_t swarm_size = 30;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  int iterations = 100;
  double box_expansion = 0.5;
  std::uint64_t seed = 0;
};

struct FitConfig {
  int smoothing_window = 5;
  int curvature_order = 3;
  std::vector<double> drop_fractions{0.05, 0.1, 0.2};
  std::size_t min_samples = 32;
  /// Interior window boundaries (sample indices); empty means one window.
  std::vector<std::size_t> window_breaks;
  double divergence_factor = 1e6;
  SgdConfig sgd;
  bool use_pso = false;
  PsoConfig pso;
};

/// Retained regression rows for one drop fraction: derivative targets of the
/// smoothed dependent channel against (state, control).
struct RegressionSet {
  std::vector<std::size_t> retained;
  Eigen::VectorXd control;
  Eigen::VectorXd state;
  Eigen::VectorXd target;

  std::size_t size() const { return retained.size(); }
};

/// Smooths the dependent channel, takes first-derivative targets, and drops
/// the floor(q * n) highest-curvature samples within [begin, end).
RegressionSet prepare_regression(const SeriesPair& pair, double drop_fraction,
                                 const FitConfig& config, std::size_t begin, std::size_t end);
RegressionSet prepare_regression(const SeriesPair& pair, double drop_fraction,
                                 const FitConfig& config);

/// Least-squares fit of target ~ f(P, state, control) by variance-reduced
/// stochastic gradient descent, preconditioned with the Gauss-Newton matrix
/// of the current snapshot. Parameters start at zero.
/// Throws UnidentifiableError when the design is rank-deficient.
std::vector<double> sgd_regression(const OdeStructure& structure, const RegressionSet& rows,
                                   const SgdConfig& config);

struct Candidate {
  OdeParams params;
  double rmse = 0.0;
  double drop_fraction = 0.0;
};

/// One candidate per drop fraction, sorted by integration RMSE ascending.
std::vector<Candidate> fit_gradient_sgd(const SeriesPair& pair, const OdeStructure& structure,
                                        const std::vector<double>& drop_fractions,
                                        const FitConfig& config);

/// Particle swarm over integration RMSE seeded with the candidates. Never
/// returns a worse RMSE than the best candidate.
Candidate refine_pso(const std::vector<Candidate>& candidates, const SeriesPair& pair,
                     const OdeStructure& structure, const PsoConfig& config,
                     double divergence_factor = 1e6);

struct FitReport {
  std::string structure_id;
  OdeParams params;
  double rmse = 0.0;
  std::vector<Candidate> candidates;
  double dropped_fraction = 0.0;
  bool pso_used = false;
  FitConfig config;
};

FitReport fit(const SeriesPair& pair, const OdeStructure& structure, const FitConfig& config);

}  // namespace odeaug
