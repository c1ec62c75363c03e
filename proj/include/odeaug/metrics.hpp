#pragma once

#include <cstddef>

#include "odeaug/series.hpp"

namespace odeaug {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

ConfusionCounts confusion(const Mask& predicted, const Mask& actual);

/// Point-wise precision, recall and F_beta. Conventions: no predicted
/// positives gives P = 0, no actual positives gives R = 0, P + R = 0 gives
/// F = 0; with no positives on either side the result is (1, 1, 1).
Prf prf_from_counts(const ConfusionCounts& c, double beta = 1.0);
Prf prf_metrics(const Mask& predicted, const Mask& actual, double beta = 1.0);

/// (1 + b^2) P R / (b^2 P + R), or 0 when the denominator vanishes.
double f_beta(double precision, double recall, double beta = 1.0);

}  // namespace odeaug
