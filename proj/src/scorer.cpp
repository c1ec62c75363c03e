#include "odeaug/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "odeaug/error.hpp"
#include "odeaug/metrics.hpp"

namespace odeaug {

ErrorVectors error_vectors(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& actual,
                           std::size_t prediction_length) {
  const auto l = static_cast<Eigen::Index>(prediction_length);
  const Eigen::Index d = actual.cols();
  const Eigen::Index n = actual.rows();
  if (l < 1) throw InvalidArgument("prediction length must be at least 1");
  if (predictions.rows() != n || predictions.cols() != l * d)
    throw InvalidArgument("prediction matrix does not match the series shape");
  ErrorVectors out;
  const Eigen::Index rows = std::max<Eigen::Index>(0, n - l);
  out.e.resize(rows, l * d);
  for (Eigen::Index t = l; t < n; ++t) {
    out.t.push_back(static_cast<std::size_t>(t));
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index i = 1; i <= l; ++i)
        out.e(t - l, c * l + i - 1) = actual(t, c) - predictions(t - i, c * l + i - 1);
  }
  return out;
}

ErrorVectors error_vectors(const LstmNetwork& net, const PredictorConfig& config,
                           const TimeSeries& series) {
  return error_vectors(predict(net, config, series), normalized_targets(config, series),
                       config.prediction_length);
}

GaussianScorer::GaussianScorer(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double ridge)
    : mean_(std::move(mean)), cov_(std::move(covariance)), ridge_(ridge) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
    throw InvalidArgument("covariance shape does not match mean");
  if (!cov_.isApprox(cov_.transpose(), 1e-12)) throw InvalidArgument("covariance is not symmetric");
  llt_.compute(cov_);
  if (llt_.info() != Eigen::Success)
    throw NotPositiveDefinite("covariance is not positive definite; increase the ridge");
  const Eigen::VectorXd diag = llt_.matrixL().toDenseMatrix().diagonal();
  // Pivots at rounding level mean the matrix is singular in practice.
  const double floor = 1e-12 * cov_.diagonal().cwiseAbs().maxCoeff();
  if ((diag.array().square() <= floor).any() || !diag.allFinite())
    throw NotPositiveDefinite("covariance is not positive definite; increase the ridge");
  const double log_det = 2.0 * diag.array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * M_PI) + log_det);
}

double GaussianScorer::log_likelihood(const Eigen::VectorXd& e) const {
  if (e.size() != mean_.size())
    throw InvalidArgument("error vector has dimension " + std::to_string(e.size()) + ", expected " +
                          std::to_string(mean_.size()));
  const Eigen::VectorXd z = llt_.matrixL().solve(e - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Eigen::VectorXd GaussianScorer::log_likelihood_rows(const Eigen::MatrixXd& e) const {
  if (e.cols() != mean_.size()) throw InvalidArgument("error vector dimension mismatch");
  Eigen::MatrixXd centered = (e.rowwise() - mean_.transpose()).transpose();
  llt_.matrixL().solveInPlace(centered);
  return (log_norm_ - 0.5 * centered.colwise().squaredNorm().array()).matrix().transpose();
}

GaussianScorer fit_gaussian(const Eigen::MatrixXd& errors, double ridge, bool diagonal) {
  if (errors.rows() < 2) throw InvalidArgument("at least two error vectors are required");
  if (ridge < 0.0) throw InvalidArgument("ridge must be non-negative");
  const double n = static_cast<double>(errors.rows());
  Eigen::VectorXd mean = errors.colwise().sum().transpose() / n;
  const Eigen::MatrixXd centered = errors.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / n;
  cov = 0.5 * (cov + cov.transpose());
  if (diagonal) cov = Eigen::MatrixXd(cov.diagonal().asDiagonal());
  cov.diagonal().array() += ridge;
  return GaussianScorer(std::move(mean), std::move(cov), ridge);
}

ThresholdChoice select_threshold(std::span<const double> scores, const Mask& labels, double beta) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  std::size_t positives = 0;
  for (bool b : labels) positives += b ? 1 : 0;
  if (positives == 0 || positives == labels.size())
    throw DegenerateLabels("threshold selection needs both normal and anomalous labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const double inf = std::numeric_limits<double>::infinity();
  ConfusionCounts c;
  c.fn = positives;
  c.tn = labels.size() - positives;

  ThresholdChoice best{-inf, -1.0, -1.0};
  auto consider = [&](double tau) {
    const Prf p = prf_from_counts(c, beta);
    if (p.f_score > best.f_score || (p.f_score == best.f_score && p.recall > best.recall))
      best = ThresholdChoice{tau, p.f_score, p.recall};
  };
  consider(-inf);
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    // Flag every sample with this score value.
    while (i < order.size() && scores[order[i]] == v) {
      if (labels[order[i]]) {
        ++c.tp;
        --c.fn;
      } else {
        ++c.fp;
        --c.tn;
      }
      ++i;
    }
    consider(i < order.size() ? 0.5 * (v + scores[order[i]]) : inf);
  }
  return best;
}

std::vector<double> score_series(const LstmNetwork& net, const PredictorConfig& config,
                                 const GaussianScorer& scorer, const TimeSeries& series) {
  const ErrorVectors ev = error_vectors(net, config, series);
  std::vector<double> out(series.length(), std::numeric_limits<double>::quiet_NaN());
  if (ev.size() == 0) return out;
  const Eigen::VectorXd ll = scorer.log_likelihood_rows(ev.e);
  for (std::size_t k = 0; k < ev.size(); ++k) out[ev.t[k]] = ll[static_cast<Eigen::Index>(k)];
  return out;
}

Mask detect_scores(std::span<const double> scores, double threshold) {
  Mask m(scores.size(), false);
  for (std::size_t i = 0; i < scores.size(); ++i) m[i] = !std::isnan(scores[i]) && scores[i] < threshold;
  return m;
}

Mask detect(const LstmNetwork& net, const PredictorConfig& config, const GaussianScorer& scorer,
            const TimeSeries& series) {
  if (!scorer.threshold()) throw InvalidArgument("scorer has no decision threshold");
  return detect_scores(score_series(net, config, scorer, series), *scorer.threshold());
}

}  // namespace odeaug
