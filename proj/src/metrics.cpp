#include "odeaug/metrics.hpp"

#include "odeaug/error.hpp"

namespace odeaug {

ConfusionCounts confusion(const Mask& predicted, const Mask& actual) {
  if (predicted.size() != actual.size())
    throw InvalidArgument("predicted and actual masks differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i])
      actual[i] ? ++c.tp : ++c.fp;
    else
      actual[i] ? ++c.fn : ++c.tn;
  }
  return c;
}

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

Prf prf_from_counts(const ConfusionCounts& c, double beta) {
  if (c.tp + c.fp == 0 && c.tp + c.fn == 0) return {1.0, 1.0, 1.0};
  Prf r;
  r.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f_score = f_beta(r.precision, r.recall, beta);
  return r;
}

Prf prf_metrics(const Mask& predicted, const Mask& actual, double beta) {
  return prf_from_counts(confusion(predicted, actual), beta);
}

}  // namespace odeaug
