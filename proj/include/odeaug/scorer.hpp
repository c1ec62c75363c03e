#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "odeaug/lstm.hpp"
#include "odeaug/series.hpp"

namespace odeaug {

/// Error vectors e(t) = x(t) - prediction of x(t) made at t-i, i = 1..l, for
/// every predicted channel (channel-major), at the steps t >= l where all l
/// past predictions exist.
struct ErrorVectors {
  std::vector<std::size_t> t;
  Eigen::MatrixXd e;  // rows align with t; l*d columns

  std::size_t size() const { return t.size(); }
};

/// `predictions` as returned by predict(); `actual` holds the predicted
/// channels (n x d) in the same units.
ErrorVectors error_vectors(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& actual,
                           std::size_t prediction_length);
ErrorVectors error_vectors(const LstmNetwork& net, const PredictorConfig& config,
                           const TimeSeries& series);

/// Multivariate normal over error vectors with an optional decision threshold
/// in log-likelihood units.
class GaussianScorer {
 public:
  GaussianScorer() = default;
  /// Throws NotPositiveDefinite if the covariance has no Cholesky factor.
  GaussianScorer(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double ridge);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double ridge() const { return ridge_; }
  std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }

  const std::optional<double>& threshold() const { return threshold_; }
  void set_threshold(std::optional<double> tau) { threshold_ = tau; }

  double log_likelihood(const Eigen::VectorXd& e) const;
  /// One score per row.
  Eigen::VectorXd log_likelihood_rows(const Eigen::MatrixXd& e) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  double ridge_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_ = 0.0;
  std::optional<double> threshold_;
};

/// Maximum-likelihood mean and covariance (1/N normalization) plus ridge*I.
/// `diagonal` keeps only the variances.
GaussianScorer fit_gaussian(const Eigen::MatrixXd& errors, double ridge = 1e-6,
                            bool diagonal = false);

struct ThresholdChoice {
  double threshold = 0.0;
  double f_score = 0.0;
  double recall = 0.0;
};

/// Threshold maximizing F_beta of "score < threshold means anomalous" over the
/// midpoints between consecutive distinct scores plus -inf and +inf. Ties go
/// to higher recall, then lower threshold. Throws DegenerateLabels unless both
/// classes are present.
ThresholdChoice select_threshold(std::span<const double> scores, const Mask& labels,
                                 double beta = 1.0);

/// Log-likelihood per step; NaN on the first l steps (no error vector).
std::vector<double> score_series(const LstmNetwork& net, const PredictorConfig& config,
                                 const GaussianScorer& scorer, const TimeSeries& series);

/// True where the log-likelihood falls strictly below the threshold. The
/// first l steps are always normal.
Mask detect(const LstmNetwork& net, const PredictorConfig& config, const GaussianScorer& scorer,
            const TimeSeries& series);
Mask detect_scores(std::span<const double> scores, double threshold);

}  // namespace odeaug
